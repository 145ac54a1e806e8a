#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "coinfer/error.hpp"
#include "coinfer/offload_env.hpp"
#include "coinfer/rng.hpp"
#include "support/fixtures.hpp"

using namespace coinfer;
using testing::make_env_config;
using testing::make_local_profile;
using testing::make_profile;

namespace {

JointAction all_local(const OffloadEnv& env) {
  JointAction a;
  for (std::size_t n = 0; n < env.ue_count(); ++n) {
    a.ue.push_back({env.config().profiles[n].local_index(), 0,
                    env.config().channel.max_power_w});
  }
  return a;
}

}  // namespace

TEST_CASE("eval mode resets to fixed distance and task count") {
  EnvConfig cfg = make_env_config(3, make_profile());
  cfg.eval_mode = true;
  OffloadEnv env(cfg);
  env.seed(9);
  env.reset();
  const EnvState s = env.state();
  for (std::size_t n = 0; n < 3; ++n) {
    CHECK(s.remaining_tasks[n] == 200);
    CHECK(s.distance_m[n] == 50.0);
    CHECK(s.residual_local_s[n] == 0.0);
    CHECK(s.residual_bits[n] == 0.0);
  }
  CHECK(s.frame_index == 0);
}

TEST_CASE("reset is deterministic per seed") {
  EnvConfig cfg = make_env_config(4, make_profile());
  OffloadEnv a(cfg), b(cfg);
  a.seed(123);
  b.seed(123);
  a.reset();
  b.reset();
  CHECK(a.state().remaining_tasks == b.state().remaining_tasks);
  CHECK(a.state().distance_m == b.state().distance_m);
  a.seed(123);
  a.reset();
  CHECK(a.state().remaining_tasks == b.state().remaining_tasks);
}

TEST_CASE("reset task counts concentrate around the Poisson mean") {
  EnvConfig cfg = make_env_config(1, make_profile());
  OffloadEnv env(cfg);
  env.seed(77);
  double acc = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    env.reset();
    acc += static_cast<double>(env.state().remaining_tasks[0]);
  }
  const double mean = acc / draws;
  CHECK(mean > 196.0);
  CHECK(mean < 204.0);
}

TEST_CASE("task_overhead closed forms") {
  DeviceProfile p = make_profile();
  SUBCASE("fully local: only t_f/e_f at B+1") {
    const auto [lat, en] = OffloadEnv::task_overhead(p.local_index(), 0.0, 0.0, p);
    CHECK(lat == p.local_latency_s[p.local_index()]);
    CHECK(en == p.local_energy_j[p.local_index()]);
  }
  SUBCASE("raw offload: pure transmission") {
    p.payload_bits[0] = 8e6;
    const auto [lat, en] = OffloadEnv::task_overhead(0, 2e6, 0.1, p);
    CHECK(lat == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(en == doctest::Approx(0.4).epsilon(1e-12));
  }
  SUBCASE("interior partition: compute + compress + transmit") {
    p.local_latency_s[2] = 0.05;
    p.compress_latency_s[2] = 0.003;
    p.payload_bits[2] = 1e6;
    const auto [lat, en] = OffloadEnv::task_overhead(2, 1e6, 0.1, p);
    CHECK(lat == doctest::Approx(1.053).epsilon(1e-12));
    CHECK(en == doctest::Approx(p.local_energy_j[2] + p.compress_energy_j[2] + 0.1)
                    .epsilon(1e-12));
  }
  SUBCASE("out-of-range partition") {
    CHECK_THROWS_AS(OffloadEnv::task_overhead(7, 1e6, 0.1, p), DomainError);
    CHECK_THROWS_AS(OffloadEnv::task_overhead(-1, 1e6, 0.1, p), DomainError);
  }
  SUBCASE("offloading with zero rate") {
    CHECK_THROWS_AS(OffloadEnv::task_overhead(0, 0.0, 0.1, p), DomainError);
  }
}

TEST_CASE("hand simulation: five local tasks per frame, exactly") {
  EnvConfig cfg = make_env_config(1, make_local_profile());
  cfg.eval_mode = true;  // K = 200
  OffloadEnv env(cfg);
  env.seed(1);
  env.reset();
  const double e_local = 0.2;  // e_f[B+1] of the fixture
  std::size_t frames = 0;
  while (!env.done()) {
    const FrameOutcome out = env.step(all_local(env));
    ++frames;
    if (!out.done) {
      CHECK(out.completed == 5);  // 0.5 s frame / 0.1 s per task
      CHECK(out.energy_j == doctest::Approx(5 * e_local).epsilon(1e-12));
      CHECK(out.reward ==
            doctest::Approx(-(0.5 + cfg.beta * out.energy_j) / 5).epsilon(1e-12));
    }
  }
  CHECK(frames == 40);  // 200 tasks / 5 per frame
  CHECK(env.completed_tasks().size() == 200);
  CHECK_FALSE(env.truncated());
  // Task conservation and per-task records.
  for (const TaskRecord& t : env.completed_tasks()) {
    CHECK(t.latency_s == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(t.energy_j == doctest::Approx(0.2).epsilon(1e-12));
  }
  CHECK_THROWS_AS(env.step(all_local(env)), ContractError);
}

TEST_CASE("K_t = 0 frame keeps the reward bounded") {
  DeviceProfile slow = make_local_profile();
  slow.local_latency_s = {0.0, 0.35, 0.7};  // full local takes 1.4 frames
  EnvConfig cfg = make_env_config(1, slow);
  cfg.eval_mode = true;
  cfg.eval_tasks = 1;
  OffloadEnv env(cfg);
  env.seed(4);
  env.reset();
  const FrameOutcome out = env.step(all_local(env));
  CHECK(out.completed == 0);
  CHECK(out.reward ==
        doctest::Approx(-(0.5 + cfg.beta * out.energy_j) / 1.0).epsilon(1e-12));
  CHECK_FALSE(out.done);
  const EnvState s = env.state();
  CHECK(s.remaining_tasks[0] == 1);
  CHECK(s.residual_local_s[0] == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("a drained UE stays idle while others work") {
  DeviceProfile fast = make_local_profile();
  fast.local_latency_s = {0.0, 0.005, 0.01};  // 50 tasks per frame
  DeviceProfile slow = make_local_profile();
  EnvConfig cfg;
  cfg.ue_count = 2;
  cfg.profiles = {fast, slow};
  cfg.channel = ChannelConfig::uniform(2, 1e6, 1e-9, 3.0, 0.5);
  cfg.eval_mode = true;
  cfg.eval_tasks = 100;
  OffloadEnv env(cfg);
  env.seed(3);
  env.reset();
  // UE0 drains after 2 frames; UE1 needs 20.
  FrameOutcome out = env.step(all_local(env));
  out = env.step(all_local(env));
  CHECK(env.state().remaining_tasks[0] == 0);
  CHECK(env.state().remaining_tasks[1] == 90);
  out = env.step(all_local(env));
  CHECK(out.per_ue[0].busy_s == 0.0);
  CHECK(out.per_ue[0].local_energy_j == 0.0);
  CHECK(out.completed == 5);
  CHECK(env.state().remaining_tasks[0] == 0);
}

TEST_CASE("power applies immediately, partition and channel are deferred") {
  DeviceProfile p = make_profile();
  EnvConfig cfg = make_env_config(1, p);
  cfg.eval_mode = true;
  cfg.eval_tasks = 50;  // enough that a task straddles the frame boundary
  OffloadEnv env(cfg);
  env.seed(8);
  env.reset();
  const int local_idx[] = {p.local_index()};

  // Frame 1: offload raw input (8e5 bits) on channel 0 at 0.5 W. Solo rate
  // at d=50: 1e6 * log2(1 + 0.5 * 8e-6 / 1e-9) ~ 1.2e7 b/s, so the first
  // task is still transmitting at the frame boundary.
  JointAction a1;
  a1.ue.push_back({0, 0, 0.5});
  env.step(a1);
  RadioState radio = env.radio();
  const double r1 = uplink_rate_on(0, 0, 0.5, a1, local_idx, radio, cfg.channel);
  double expected_bits = 8e5 - r1 * 0.5;
  // First task completed? 8e5 / r1 = 0.066 s < 0.5, so several tasks finish;
  // compute how many fit and the residual of the in-flight one.
  const double per_task = 8e5 / r1;
  const int full = static_cast<int>(0.5 / per_task);
  expected_bits = 8e5 - (0.5 - full * per_task) * r1;
  CHECK(env.state().residual_bits[0] ==
        doctest::Approx(expected_bits).epsilon(1e-9));

  // Frame 2: switch to fully local at a lower power. New tasks never
  // transmit, so every transmitted bit this frame belongs to the in-flight
  // task, which keeps its committed channel 0 but adopts the new 0.2 W.
  JointAction a2;
  a2.ue.push_back({p.local_index(), 1, 0.2});
  const double bits_before = env.state().residual_bits[0];
  REQUIRE(bits_before > 0.0);
  const FrameOutcome out2 = env.step(a2);
  const double r2 = uplink_rate_on(0, 0, 0.2, a2, local_idx, radio, cfg.channel);
  const double t_finish = bits_before / r2;
  REQUIRE(t_finish < 0.5);
  CHECK(out2.per_ue[0].bits_sent == doctest::Approx(bits_before).epsilon(1e-12));
  CHECK(out2.per_ue[0].tx_energy_j ==
        doctest::Approx(0.2 * t_finish).epsilon(1e-9));
  CHECK(env.state().residual_bits[0] == 0.0);
}

TEST_CASE("random episodes: conservation, energy additivity, reward identity") {
  RngStream rng(20240);
  for (int episode = 0; episode < 60; ++episode) {
    const std::size_t n_ue = 1 + rng.uniform_int(3);
    DeviceProfile p = make_profile();
    EnvConfig cfg = make_env_config(n_ue, p);
    cfg.task_mean = 2.0 + rng.uniform(0.0, 8.0);
    cfg.max_frames = 4000;
    OffloadEnv env(cfg);
    env.seed(rng.next_u64());
    env.reset();
    const EnvState start = env.state();
    const std::uint64_t initial =
        std::accumulate(start.remaining_tasks.begin(),
                        start.remaining_tasks.end(), std::uint64_t{0});
    double total_energy = 0.0;
    std::vector<double> stat_energy;
    while (!env.done()) {
      JointAction a;
      for (std::size_t n = 0; n < n_ue; ++n) {
        UeAction u;
        u.partition = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(p.points())));
        u.channel = static_cast<int>(rng.uniform_int(2));
        u.power_w = rng.uniform(0.1, 0.5);  // keeps rates workable
        a.ue.push_back(u);
      }
      const FrameOutcome out = env.step(a);
      total_energy += out.energy_j;
      // Reward identity, exactly as implemented.
      CHECK(out.reward == -(cfg.frame_duration_s + cfg.beta * out.energy_j) /
                              static_cast<double>(std::max(out.completed, 1)));
      double split = 0.0;
      for (const UeFrameStats& s : out.per_ue) {
        split += s.local_energy_j + s.tx_energy_j;
      }
      CHECK(out.energy_j == doctest::Approx(split).epsilon(1e-12));
    }
    REQUIRE_FALSE(env.truncated());
    // Task conservation.
    CHECK(env.completed_tasks().size() == initial);
    // Energy additivity: frame sums equal per-task records (all tasks done).
    double task_energy = 0.0;
    for (const TaskRecord& t : env.completed_tasks()) task_energy += t.energy_j;
    CHECK(total_energy == doctest::Approx(task_energy).epsilon(1e-9));
  }
}

TEST_CASE("monotone resource property: more power never hurts latency") {
  DeviceProfile p = make_profile();
  EnvConfig cfg = make_env_config(1, p);
  cfg.eval_mode = true;
  cfg.eval_tasks = 50;
  RngStream rng(5150);
  for (int trial = 0; trial < 20; ++trial) {
    const int b = static_cast<int>(rng.uniform_int(5));  // offloading partitions
    const double p_lo = rng.uniform(0.05, 0.25);
    const double p_hi = p_lo + rng.uniform(0.01, 0.25);
    double mean_lat[2];
    const double powers[2] = {p_lo, p_hi};
    for (int i = 0; i < 2; ++i) {
      OffloadEnv env(cfg);
      env.seed(1);
      env.reset();
      JointAction a;
      a.ue.push_back({b, 0, powers[i]});
      while (!env.done()) env.step(a);
      double acc = 0.0;
      for (const TaskRecord& t : env.completed_tasks()) acc += t.latency_s;
      mean_lat[i] = acc / static_cast<double>(env.completed_tasks().size());
    }
    CHECK(mean_lat[1] <= mean_lat[0] + 1e-12);
  }
}

TEST_CASE("determinism: identical seeds and actions give identical traces") {
  EnvConfig cfg = make_env_config(3, make_profile());
  cfg.task_mean = 10.0;
  RngStream action_rng(42);
  std::vector<JointAction> script;
  for (int i = 0; i < 200; ++i) {
    JointAction a;
    for (int n = 0; n < 3; ++n) {
      a.ue.push_back({static_cast<int>(action_rng.uniform_int(6)),
                      static_cast<int>(action_rng.uniform_int(2)),
                      action_rng.uniform(0.05, 0.5)});
    }
    script.push_back(a);
  }
  auto run = [&](std::vector<double>& rewards, std::vector<double>& energies) {
    OffloadEnv env(cfg);
    env.seed(777);
    env.reset();
    for (const JointAction& a : script) {
      if (env.done()) break;
      const FrameOutcome out = env.step(a);
      rewards.push_back(out.reward);
      energies.push_back(out.energy_j);
    }
  };
  std::vector<double> r1, e1, r2, e2;
  run(r1, e1);
  run(r2, e2);
  CHECK(r1 == r2);  // bit-identical
  CHECK(e1 == e2);
}

TEST_CASE("pathological policy hits the frame cap and is marked truncated") {
  DeviceProfile p = make_profile();
  EnvConfig cfg = make_env_config(1, p);
  cfg.eval_mode = true;
  cfg.eval_tasks = 50;
  cfg.max_frames = 20;
  OffloadEnv env(cfg);
  env.seed(2);
  env.reset();
  JointAction a;
  a.ue.push_back({0, 0, 1e-9});  // vanishing power: the raw input crawls
  std::size_t frames = 0;
  while (!env.done()) {
    env.step(a);
    ++frames;
  }
  CHECK(frames == 20);
  CHECK(env.truncated());
  CHECK(env.completed_tasks().size() < 50);
}

TEST_CASE("objectives") {
  SUBCASE("P1 hand example") {
    std::vector<TaskRecord> tasks = {{0, 1.0, 1.0}, {0, 2.0, 1.5},
                                     {1, 5.0, 1.5}};
    CHECK(objective_p1(tasks, 2, 0.5, true) == doctest::Approx(7.0));
    CHECK(objective_p1(tasks, 2, 0.0, true) == doctest::Approx(5.0));
    CHECK_THROWS_AS(objective_p1(tasks, 2, 0.5, false), ContractError);
  }
  SUBCASE("P1 single task degenerate") {
    std::vector<TaskRecord> tasks = {{0, 0.4, 0.9}};
    CHECK(objective_p1(tasks, 1, 0.25, true) ==
          doctest::Approx(0.4 + 0.25 * 0.9));
  }
  SUBCASE("P2") {
    CHECK(objective_p2(std::vector<double>{-0.36, -0.36}) ==
          doctest::Approx(0.72));
    CHECK(objective_p2(std::vector<double>{}) == 0.0);
  }
}

TEST_CASE("P2 algebra on a constant-completion episode") {
  // Every frame completes exactly 5 tasks, so sum_t (T0 + beta E_t)/K_t
  // equals (T T0 + beta sum E_t) / 5.
  EnvConfig cfg = make_env_config(1, make_local_profile());
  cfg.eval_mode = true;
  OffloadEnv env(cfg);
  env.seed(1);
  env.reset();
  double total_energy = 0.0;
  std::size_t frames = 0;
  while (!env.done()) {
    const FrameOutcome out = env.step(all_local(env));
    REQUIRE(out.completed == 5);
    total_energy += out.energy_j;
    ++frames;
  }
  const double f2 = objective_p2(env.rewards());
  const double algebra =
      (static_cast<double>(frames) * cfg.frame_duration_s + cfg.beta * total_energy) / 5.0;
  CHECK(f2 == doctest::Approx(algebra).epsilon(1e-12));
}

TEST_CASE("trace CSV schema") {
  EnvConfig cfg = make_env_config(2, make_profile());
  cfg.eval_mode = true;
  cfg.eval_tasks = 3;
  OffloadEnv env(cfg);
  env.seed(5);
  env.reset();
  EpisodeTrace trace;
  trace.ue_count = 2;
  while (!env.done()) {
    JointAction a = all_local(env);
    const std::size_t frame = env.state().frame_index;
    const FrameOutcome out = env.step(a);
    trace.rows.push_back({frame, a, out.completed, out.energy_j, out.reward});
  }
  std::ostringstream ss;
  trace.write_csv(ss);
  const std::string csv = ss.str();
  CHECK(csv.find("frame_index,b0,c0,p0,b1,c1,p1,K_t,E_t,r_t") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') ==
        static_cast<long>(trace.rows.size() + 1));
}
