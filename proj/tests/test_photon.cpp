#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "cptsense/errors.hpp"
#include "cptsense/liouville.hpp"
#include "cptsense/photon.hpp"
#include "cptsense/rng.hpp"
#include "cptsense/units.hpp"

using namespace cptsense;

namespace {

CptParams fig2_params() {
  return CptParams(mhz_to_rad_s(2.8), mhz_to_rad_s(13.0), mhz_to_rad_s(0.25),
                   0.016);
}

BathPath constant_path(double x, double duration, double dt) {
  BathPath p;
  p.dt = dt;
  p.samples.assign(static_cast<std::size_t>(std::llround(duration / dt)), x);
  return p;
}

}  // namespace

TEST_CASE("trajectory preconditions", "[photon]") {
  const CptParams p = fig2_params();
  const BathPath path = constant_path(0.0, 10e-6, 1e-6);
  CHECK_THROWS_AS(sse_trajectory(p, path, 0.0, 1), InvalidParams);
  // gamma * dt = 0.08 here, comfortably past the 0.05 stability guard.
  CHECK_THROWS_AS(sse_trajectory(p, path, 1e-9, 1), StepTooCoarse);
  CHECK_THROWS_AS(sse_trajectory(p, BathPath{}, 0.6e-9, 1), InvalidParams);
}

TEST_CASE("trajectory event statistics at a fixed field", "[photon]") {
  const CptParams p = fig2_params();
  const double duration = 5e-3;
  const BathPath path = constant_path(0.0, duration, 1e-6);
  const SseResult traj = sse_trajectory(p, path, 0.6e-9, 2024, true);

  // Total emissions track Gamma * rho_ee * T for the exact steady state.
  const double expected = p.gamma * rho_ee_exact(p, 0.0) * duration;
  CHECK(static_cast<double>(traj.events.size()) ==
        Catch::Approx(expected).epsilon(0.10));
  CHECK(static_cast<double>(traj.events.size()) < p.gamma * duration);

  // Events are ordered in time, inside the window, on both channels.
  int n0 = 0, n1 = 0;
  double prev = 0.0;
  for (const auto& ev : traj.events) {
    CHECK(ev.time >= prev);
    prev = ev.time;
    (ev.channel == DecayChannel::to_state_0 ? n0 : n1) += 1;
  }
  CHECK(prev <= duration);
  CHECK(n0 > 0);
  CHECK(n1 > 0);
  // The 50/50 branching should not be grossly lopsided.
  CHECK(std::abs(n0 - n1) < 6.0 * std::sqrt(static_cast<double>(n0 + n1)));

  // The conditional excited population is a valid probability whose time
  // average reproduces the ensemble steady state.
  REQUIRE(traj.rho_ee_trace.size() == path.samples.size());
  double mean_trace = 0.0;
  for (double r : traj.rho_ee_trace) {
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    mean_trace += r;
  }
  mean_trace /= static_cast<double>(traj.rho_ee_trace.size());
  CHECK(mean_trace == Catch::Approx(rho_ee_exact(p, 0.0)).epsilon(0.20));
}

TEST_CASE("trajectory goes quiet at the dark point", "[photon]") {
  const CptParams p = fig2_params();
  const BathPath path = constant_path(p.bias, 1e-3, 1e-6);
  const SseResult traj = sse_trajectory(p, path, 0.6e-9, 7);
  // Starting from |0> the state is half dark, half bright; after the bright
  // component is pumped out, emissions stop.  A handful of early jumps is all
  // that a full millisecond can produce.
  CHECK(traj.events.size() < 10);
  if (!traj.events.empty()) CHECK(traj.events.back().time < 0.1e-3);
}

TEST_CASE("trajectories are deterministic in the seed", "[photon]") {
  const CptParams p = fig2_params();
  const BathPath path = constant_path(0.0, 0.5e-3, 1e-6);
  const SseResult a = sse_trajectory(p, path, 0.6e-9, 5);
  const SseResult b = sse_trajectory(p, path, 0.6e-9, 5);
  const SseResult c = sse_trajectory(p, path, 0.6e-9, 6);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].time == b.events[i].time);
    CHECK(a.events[i].channel == b.events[i].channel);
  }
  auto times = [](const SseResult& t) {
    std::vector<double> v;
    for (const auto& ev : t.events) v.push_back(ev.time);
    return v;
  };
  CHECK(times(a) != times(c));
}

TEST_CASE("thinning keeps a Bernoulli fraction in order", "[photon]") {
  std::vector<EmissionEvent> events;
  events.reserve(10000);
  for (int i = 0; i < 10000; ++i)
    events.push_back({1e-6 * i, DecayChannel::to_state_0});

  CHECK_THROWS_AS(thin_detect(events, -0.1, 1), InvalidParams);
  CHECK_THROWS_AS(thin_detect(events, 1.1, 1), InvalidParams);
  CHECK(thin_detect(events, 1.0, 1).size() == events.size());
  CHECK(thin_detect(events, 0.0, 1).empty());

  const auto kept = thin_detect(events, 0.5, 99);
  CHECK(std::abs(static_cast<double>(kept.size()) - 5000.0) < 200.0);
  for (std::size_t i = 1; i < kept.size(); ++i)
    CHECK(kept[i].time > kept[i - 1].time);

  const auto again = thin_detect(events, 0.5, 99);
  CHECK(again.size() == kept.size());
}

TEST_CASE("binning maps event times to bin indices", "[photon]") {
  std::vector<EmissionEvent> events = {
      {0.05, DecayChannel::to_state_0},  // bin 0
      {0.10, DecayChannel::to_state_1},  // exactly on a boundary: bin 1
      {0.19, DecayChannel::to_state_0},  // bin 1
      {0.31, DecayChannel::to_state_1},  // bin 3
      {-0.2, DecayChannel::to_state_0},  // before the window: dropped
      {0.45, DecayChannel::to_state_0},  // past the window: dropped
  };
  const CountSeries c = bin_events(events, 0.1, 0.0, 0.4);
  REQUIRE(c.counts.size() == 4);
  CHECK(c.counts[0] == 1);
  CHECK(c.counts[1] == 2);
  CHECK(c.counts[2] == 0);
  CHECK(c.counts[3] == 1);
  CHECK(c.total() == 4);
  CHECK(c.bin_width == 0.1);
  CHECK_THROWS_AS(bin_events(events, 0.0, 0.0, 1.0), InvalidParams);

  // A shifted window re-references both the bins and the drop cuts.
  const CountSeries shifted = bin_events(events, 0.1, 0.05, 0.3);
  REQUIRE(shifted.counts.size() == 3);
  CHECK(shifted.counts[0] == 2);  // 0.05 <= t < 0.15 catches 0.05 and 0.10
  CHECK(shifted.counts[1] == 1);
  CHECK(shifted.counts[2] == 1);  // 0.31; the 0.45 event now falls past 0.35
  CHECK(shifted.total() == 4);
}

TEST_CASE("steady-state counts have the Poisson mean of the lineshape", "[photon]") {
  const CptParams p = fig2_params();
  const BathPath path = constant_path(0.0, 0.5, 1e-5);
  const CountSeries c = steady_emission_counts(p, path, 10e-6, 31);
  REQUIRE(c.counts.size() == 50000);

  const double mean_per_bin = p.eta * p.gamma * 10e-6 * rho_ee_analytic(p, 0.0);
  const double expected_total = mean_per_bin * 50000.0;
  CHECK(static_cast<double>(c.total()) ==
        Catch::Approx(expected_total).margin(5.0 * std::sqrt(expected_total)));

  const CountSeries c2 = steady_emission_counts(p, path, 10e-6, 31);
  CHECK(c.counts == c2.counts);
  CHECK_THROWS_AS(steady_emission_counts(p, path, 0.0, 1), InvalidParams);
  CHECK_THROWS_AS(steady_emission_counts(p, BathPath{}, 1e-5, 1), InvalidParams);
}

TEST_CASE("unravelled and steady-state pipelines agree on mean counts", "[photon]") {
  const CptParams p = fig2_params();
  const BathParams b(1e-3, mhz_to_rad_s(0.13));
  const int runs = 20;
  const double duration = 1e-3, tau = 10e-6;

  double sum_d = 0.0, sum_d2 = 0.0;
  for (int r = 0; r < runs; ++r) {
    const BathPath path =
        ou_path(b, duration, 1e-6, derive_seed(17, r, "bath"));
    const SseResult traj =
        sse_trajectory(p, path, 0.6e-9, derive_seed(17, r, "jumps"));
    const auto detected =
        thin_detect(traj.events, p.eta, derive_seed(17, r, "thin"));
    const CountSeries from_sse = bin_events(detected, tau, 0.0, duration);
    const CountSeries from_steady =
        steady_emission_counts(p, path, tau, derive_seed(17, r, "counts"));
    const double d = static_cast<double>(from_sse.total()) -
                     static_cast<double>(from_steady.total());
    sum_d += d;
    sum_d2 += d * d;
  }
  const double mean_d = sum_d / runs;
  const double var_d = (sum_d2 / runs - mean_d * mean_d) * runs / (runs - 1.0);
  const double se = std::sqrt(var_d / runs);
  CHECK(std::abs(mean_d) <= 3.0 * se + 0.5);
}

TEST_CASE("event and count serialization", "[photon]") {
  std::vector<EmissionEvent> events = {{0.25, DecayChannel::to_state_0},
                                       {1.5, DecayChannel::to_state_1}};
  std::ostringstream os;
  write_events_csv(os, events);
  CHECK(os.str() ==
        "time_s,channel\n"
        "0.25,0\n"
        "1.5,1\n");

  CountSeries c;
  c.bin_width = 0.5;
  c.t_start = 2.0;
  c.counts = {3, 0, 7};
  std::ostringstream os2;
  write_counts_csv(os2, c);
  CHECK(os2.str() ==
        "bin_index,t_s,count\n"
        "0,2,3\n"
        "1,2.5,0\n"
        "2,3,7\n");
}
