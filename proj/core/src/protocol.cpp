#include "netobs/protocol.hpp"

#include <nlohmann/json.hpp>

#include "netobs/errors.hpp"
#include "netobs/rng.hpp"

namespace netobs {

namespace {

void require_scheduler_valid(const SchedulerState& s) {
  if (s.num_channels < 1) throw DomainError("SchedulerState: num_channels must be >= 1");
  if (s.max_dropouts < 0) throw DomainError("SchedulerState: max_dropouts must be >= 0");
  if (s.pi < 1 || s.pi > s.num_channels) {
    throw DomainError("SchedulerState: pi out of range [1, num_channels]");
  }
  if (s.sigma < 0 || s.sigma > s.max_dropouts) {
    throw DomainError("SchedulerState: sigma out of range [0, max_dropouts]");
  }
}

}  // namespace

SchedulerState step(const SchedulerState& s, bool received) {
  require_scheduler_valid(s);
  SchedulerState next = s;
  if (received) {
    next.sigma = 0;
    if (s.mode == ScheduleMode::kRoundRobin) {
      next.pi = (s.pi % s.num_channels) + 1;
    } else {
      next.pi = 1;
    }
  } else {
    if (s.sigma == s.max_dropouts) {
      throw DomainError("step: dropout run would exceed max_dropouts = " +
                        std::to_string(s.max_dropouts));
    }
    next.sigma = s.sigma + 1;
  }
  return next;
}

void DropoutPlan::validate() const {
  if (max_dropouts < 0) throw DomainError("DropoutPlan: max_dropouts must be >= 0");
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 0 || counts[j] > max_dropouts) {
      throw DomainError("DropoutPlan: counts[" + std::to_string(j) + "] = " +
                        std::to_string(counts[j]) + " outside [0, " +
                        std::to_string(max_dropouts) + "]");
    }
  }
}

DropoutPlan generate_dropouts(int max_dropouts, int count, std::uint64_t seed) {
  if (max_dropouts < 0) throw DomainError("generate_dropouts: max_dropouts must be >= 0");
  if (count < 0) throw DomainError("generate_dropouts: count must be >= 0");
  SplitMix64 rng(seed);
  DropoutPlan plan;
  plan.max_dropouts = max_dropouts;
  plan.counts.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    plan.counts.push_back(static_cast<int>(
        rng.next_below(static_cast<std::uint64_t>(max_dropouts) + 1)));
  }
  return plan;
}

std::vector<bool> plan_to_attempts(const DropoutPlan& plan) {
  plan.validate();
  std::vector<bool> attempts;
  for (int c : plan.counts) {
    attempts.insert(attempts.end(), static_cast<std::size_t>(c), false);
    attempts.push_back(true);
  }
  return attempts;
}

DropoutPlan plan_from_attempts(const std::vector<bool>& attempts, int max_dropouts) {
  if (!attempts.empty() && !attempts.back()) {
    throw DomainError("plan_from_attempts: sequence must end with a reception");
  }
  DropoutPlan plan;
  plan.max_dropouts = max_dropouts;
  int run = 0;
  for (bool received : attempts) {
    if (received) {
      plan.counts.push_back(run);
      run = 0;
    } else {
      ++run;
    }
  }
  plan.validate();
  return plan;
}

std::vector<ReceptionEvent> reception_times(const DropoutPlan& plan, double period,
                                            int num_channels, ScheduleMode mode) {
  plan.validate();
  if (!(period > 0.0)) throw DomainError("reception_times: period must be positive");
  if (num_channels < 1) throw DomainError("reception_times: num_channels must be >= 1");

  std::vector<ReceptionEvent> events;
  events.reserve(plan.counts.size());
  double t = 0.0;
  int channel = 1;
  for (std::size_t j = 0; j < plan.counts.size(); ++j) {
    events.push_back({t, channel});
    t += (1 + plan.counts[j]) * period;
    if (mode == ScheduleMode::kRoundRobin) channel = (channel % num_channels) + 1;
  }
  return events;
}

std::string plan_to_json(const DropoutPlan& plan) {
  plan.validate();
  nlohmann::json j;
  j["max_dropouts"] = plan.max_dropouts;
  j["counts"] = plan.counts;
  return j.dump(2) + "\n";
}

DropoutPlan plan_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("dropout plan: malformed JSON");
  if (!j.contains("max_dropouts") || !j["max_dropouts"].is_number_integer()) {
    throw ConfigError("dropout plan: missing integer field 'max_dropouts'");
  }
  if (!j.contains("counts") || !j["counts"].is_array()) {
    throw ConfigError("dropout plan: missing array field 'counts'");
  }
  DropoutPlan plan;
  plan.max_dropouts = j["max_dropouts"].get<int>();
  for (const auto& entry : j["counts"]) {
    if (!entry.is_number_integer()) {
      throw ConfigError("dropout plan: counts entries must be integers");
    }
    plan.counts.push_back(entry.get<int>());
  }
  plan.validate();
  return plan;
}

}  // namespace netobs
