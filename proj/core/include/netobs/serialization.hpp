#pragma once

#include <string>

#include "netobs/synthesis.hpp"

namespace netobs {

// Shortest representation with up to 17 significant digits; round trips
// to the same double bit pattern.
std::string format_double(double v);

// Gain schedules and certificates persist as JSON with matrices written as
// nested row arrays. Writers emit every double through format_double, so a
// written artifact reloads to bit-identical matrices.
std::string gains_to_json(const GainSchedule& gains);
GainSchedule gains_from_json(const std::string& text);
void write_gains_json(const GainSchedule& gains, const std::string& path);
GainSchedule read_gains_json(const std::string& path);

std::string certificate_to_json(const Certificate& cert);
Certificate certificate_from_json(const std::string& text);
void write_certificate_json(const Certificate& cert, const std::string& path);
Certificate read_certificate_json(const std::string& path);

std::string verification_to_json(const VerificationReport& report);
void write_verification_json(const VerificationReport& report, const std::string& path);

// Whole-file helpers used by the readers above.
std::string slurp_file(const std::string& path);
void spill_file(const std::string& path, const std::string& content);

}  // namespace netobs
