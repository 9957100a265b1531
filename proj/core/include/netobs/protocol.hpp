#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace netobs {

// How sensor data reaches the observer.
//  kRoundRobin:    one sensor channel transmits per sampling instant, in
//                  cyclic order; a reception delivers a single measurement.
//  kConcentrated:  every sensor transmits at each instant; a reception
//                  delivers the full output vector at once.
enum class ScheduleMode { kRoundRobin, kConcentrated };

// Network counters carried by the observer between sampling instants.
//   pi     channel whose measurement was received most recently (1-based;
//          fixed at 1 in concentrated mode).
//   sigma  number of consecutive dropouts since that reception.
// The transmitter scheduled at the next instant is the cyclic successor of
// pi, and it keeps retrying until a packet gets through.
struct SchedulerState {
  int pi = 1;
  int sigma = 0;
  int num_channels = 1;
  int max_dropouts = 0;
  ScheduleMode mode = ScheduleMode::kRoundRobin;
};

// Advances the counters across one sampling instant. On a reception pi moves
// to the cyclic successor (stays 1 in concentrated mode) and sigma resets;
// on a dropout sigma increments. A dropout when sigma == max_dropouts throws
// DomainError, since the design assumes dropout runs never exceed that bound.
SchedulerState step(const SchedulerState& s, bool received);

// A sequence of dropout run lengths: counts[j] is the number of consecutive
// dropouts between reception j and reception j + 1. Every entry lies in
// [0, max_dropouts].
struct DropoutPlan {
  std::vector<int> counts;
  int max_dropouts = 0;

  void validate() const;  // throws DomainError on an out-of-range entry
};

// Draws `count` run lengths uniformly from {0, ..., max_dropouts} using the
// fixed SplitMix64 generator, so a seed identifies the same plan everywhere.
DropoutPlan generate_dropouts(int max_dropouts, int count, std::uint64_t seed);

// Per-instant view of a plan: for each gap, counts[j] failures then one
// success. The sequence therefore always ends with `true`.
std::vector<bool> plan_to_attempts(const DropoutPlan& plan);

// Inverse of plan_to_attempts. The attempt sequence must end with a success;
// max_dropouts is taken as given and each run is checked against it.
DropoutPlan plan_from_attempts(const std::vector<bool>& attempts, int max_dropouts);

// A reception instant on the timeline and the channel it delivered
// (channel is always 1 in concentrated mode).
struct ReceptionEvent {
  double time = 0.0;
  int channel = 1;
};

// Expands a plan into the reception timeline it induces, starting from the
// reception at time 0 on channel 1. The result has one event per plan entry:
// event j + 1 happens (1 + counts[j]) * period after event j, and counts
// back() describes the gap that follows the last listed reception.
std::vector<ReceptionEvent> reception_times(const DropoutPlan& plan, double period,
                                            int num_channels, ScheduleMode mode);

// JSON round trip for plans: {"max_dropouts": d, "counts": [...]}.
std::string plan_to_json(const DropoutPlan& plan);
DropoutPlan plan_from_json(const std::string& text);

}  // namespace netobs
