#include "overtake/scenario.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace overtake {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_range(const Range& r, const char* name, bool positive_only) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min > r.max)
    throw std::invalid_argument(std::string("ranges.") + name + ": need finite min <= max");
  if (positive_only ? r.min <= 0.0 : r.min < 0.0)
    throw std::invalid_argument(std::string("ranges.") + name +
                                (positive_only ? ": min must be > 0" : ": min must be >= 0"));
}

}  // namespace

void ScenarioSpec::validate() const {
  if (!(d1 > 0.0 && d2 > 0.0 && d3 > 0.0 && std::isfinite(d1) && std::isfinite(d2) &&
        std::isfinite(d3)))
    throw std::invalid_argument("scenario " + std::to_string(id) + ": distances must be > 0");
  if (!(v1 >= 0.0 && v2 >= 0.0 && v3 >= 0.0 && std::isfinite(v1) && std::isfinite(v2) &&
        std::isfinite(v3)))
    throw std::invalid_argument("scenario " + std::to_string(id) + ": speeds must be >= 0");
  if (npc_count < 0 || npc_count > 3)
    throw std::invalid_argument("scenario " + std::to_string(id) + ": npc_count must be 0..3");
}

void ParameterRanges::validate() const {
  check_range(d1, "d1", true);
  check_range(d2, "d2", true);
  check_range(d3, "d3", true);
  check_range(v1, "v1", false);
  check_range(v2, "v2", false);
  check_range(v3, "v3", false);
  if (npc_counts.empty()) throw std::invalid_argument("ranges.npc_counts: must not be empty");
  for (int c : npc_counts)
    if (c < 1 || c > 3) throw std::invalid_argument("ranges.npc_counts: values must be 1..3");
}

bool ParameterRanges::contains(const ScenarioSpec& s) const {
  bool count_ok = false;
  for (int c : npc_counts) count_ok = count_ok || c == s.npc_count;
  return count_ok && d1.contains(s.d1) && d2.contains(s.d2) && d3.contains(s.d3) &&
         v1.contains(s.v1) && v2.contains(s.v2) && v3.contains(s.v3);
}

std::uint64_t scenario_stream_seed(std::uint64_t master_seed, std::uint64_t id) {
  return splitmix64(master_seed ^ splitmix64(id));
}

std::vector<ScenarioSpec> generate_scenarios(std::size_t n, const ParameterRanges& ranges,
                                             std::uint64_t seed) {
  ranges.validate();
  std::vector<ScenarioSpec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(scenario_stream_seed(seed, i));
    auto draw = [&rng](const Range& r) {
      return std::uniform_real_distribution<double>(r.min, r.max)(rng);
    };
    ScenarioSpec s;
    s.id = static_cast<int>(i);
    s.d1 = draw(ranges.d1);
    s.d2 = draw(ranges.d2);
    s.v1 = draw(ranges.v1);
    s.v2 = draw(ranges.v2);
    s.d3 = draw(ranges.d3);
    s.v3 = draw(ranges.v3);
    std::uniform_int_distribution<std::size_t> pick(0, ranges.npc_counts.size() - 1);
    s.npc_count = ranges.npc_counts[pick(rng)];
    s.seed = rng();
    out.push_back(s);
  }
  return out;
}

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::Crash: return "crash";
    case Outcome::OffRoad: return "off_road";
    case Outcome::Timeout: return "timeout";
  }
  return "unknown";
}

}  // namespace overtake
