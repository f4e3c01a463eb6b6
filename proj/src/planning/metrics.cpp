#include "bdplan/planning/metrics.hpp"

#include <limits>
#include <stdexcept>

#include "bdplan/spec/semantics.hpp"

namespace bdplan::planning {

namespace {

template <class F>
double mean_of(std::span<const PlanResult> rs, F f) {
  double s = 0.0;
  for (const auto& r : rs) s += f(r);
  return s / static_cast<double>(rs.size());
}

double relative_increase(double base, double value) {
  if (base == 0.0) return value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (value - base) / base;
}

}  // namespace

double trigger_rate(std::span<const TriggeredOutcome> triggered, int horizon) {
  if (triggered.empty()) throw std::invalid_argument("trigger_rate: no triggered results");
  size_t hits = 0;
  for (const auto& t : triggered) {
    Trajectory tr = evaluation_trajectory(t.result, horizon);
    hits += spec::robustness(t.formula, tr, {}) > 0.0;
  }
  return static_cast<double>(hits) / static_cast<double>(triggered.size());
}

MetricsReport metrics_suite(std::span<const PlanResult> benign,
                            std::span<const PlanResult> backdoored,
                            std::span<const TriggeredOutcome> triggered, int horizon) {
  if (benign.empty() || backdoored.empty())
    throw std::invalid_argument("metrics_suite: empty clean result sets");
  if (benign.size() != backdoored.size())
    throw std::invalid_argument("metrics_suite: clean result sets are not paired");
  MetricsReport m;
  m.clean_tasks = benign.size();
  m.triggered_tasks = triggered.size();
  auto len = [](const PlanResult& r) { return r.path_length; };
  auto exp = [](const PlanResult& r) { return static_cast<double>(r.explore_steps); };
  auto ok = [](const PlanResult& r) { return r.success ? 1.0 : 0.0; };
  m.mean_len_benign = mean_of(benign, len);
  m.mean_len_backdoored = mean_of(backdoored, len);
  m.mean_explore_benign = mean_of(benign, exp);
  m.mean_explore_backdoored = mean_of(backdoored, exp);
  m.success_benign = mean_of(benign, ok);
  m.success_backdoored = mean_of(backdoored, ok);
  m.path_len_incr = relative_increase(m.mean_len_benign, m.mean_len_backdoored);
  m.explore_incr = relative_increase(m.mean_explore_benign, m.mean_explore_backdoored);
  double lb = 0.0, lk = 0.0, eb = 0.0, ek = 0.0;
  for (size_t i = 0; i < benign.size(); ++i) {
    if (!benign[i].success || !backdoored[i].success) continue;
    ++m.common_solved;
    lb += benign[i].path_length;
    lk += backdoored[i].path_length;
    eb += benign[i].explore_steps;
    ek += backdoored[i].explore_steps;
  }
  m.path_len_incr_common = relative_increase(lb, lk);
  m.explore_incr_common = relative_increase(eb, ek);
  if (!triggered.empty()) {
    m.trigger_rate = trigger_rate(triggered, horizon);
    double s = 0.0;
    for (const auto& t : triggered) s += t.result.success ? 1.0 : 0.0;
    m.success_triggered = s / static_cast<double>(triggered.size());
  }
  return m;
}

}  // namespace bdplan::planning
