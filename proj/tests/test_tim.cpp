#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "isacim/channel.hpp"
#include "isacim/pilots.hpp"
#include "isacim/rng.hpp"
#include "isacim/tim.hpp"

using namespace isacim;

namespace {

MatC random_qpsk(int rows, int cols, std::uint64_t seed) {
  PhiloxStream rng(seed, StreamPurpose::messages, 0, 0);
  MatC m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      int q = static_cast<int>(rng.uniform() * 4.0);
      m(r, c) = std::polar(1.0, kPi / 2.0 * q + kPi / 4.0);
    }
  return m;
}

ChannelTensor draw_channel(const TimPlan& plan, int t0, std::uint64_t seed) {
  AntennaSpec ant = AntennaSpec::uniform(plan.topo.n_tx, plan.topo.K);
  PhiloxStream crng(seed, StreamPurpose::channel_comm, 0, 0);
  PhiloxStream srng(seed, StreamPurpose::channel_sensor, 0, 0);
  return sample_channel(plan.topo, ant, t0, Coherence::constant_block, crng, srng);
}

}  // namespace

TEST_CASE("antidote plan dimensions", "[tim]") {
  TimPlan p = plan_antidote(5, 1, 2, false);
  REQUIRE(p.L == 5);
  REQUIRE(p.n_v == 6);
  REQUIRE(p.n0 == 2);
  REQUIRE(p.mprime == 3);
  REQUIRE(p.rs_order == std::vector<int>{3, 4, 6});
  REQUIRE(p.periods == 2);
  REQUIRE(p.t0 == 10);
  REQUIRE(p.N == 4);
  REQUIRE(p.msgs_per_period == 10);
  REQUIRE(p.point.sdof == Rational(2, 5));
  REQUIRE(p.point.cdof == Rational(2));
  // The replaced transmitter carries sensing only.
  REQUIRE(p.tx_terms[5].empty());

  TimPlan q = plan_antidote(5, 1, 1, true);
  REQUIRE(q.L == 5);
  REQUIRE(q.n_v == 5);
  REQUIRE(q.n0 == 2);
  REQUIRE(q.mprime == 2);
  REQUIRE(q.rs_order == std::vector<int>{3, 4});
  REQUIRE(q.periods == 1);
  REQUIRE(q.t0 == 5);
  REQUIRE(q.N == 2);

  // A sensing set that collapses to nothing is infeasible, not an accident.
  REQUIRE_THROWS_AS(plan_antidote(3, 1, 1, true), infeasible_error);
}

TEST_CASE("regular plan dimensions", "[tim]") {
  TimPlan p = plan_regular(5, 3, false);
  REQUIRE(p.L == 4);
  REQUIRE(p.n_v == 6);
  REQUIRE(p.n0 == 2);
  REQUIRE(p.mprime == 3);
  REQUIRE(p.periods == 2);
  REQUIRE(p.t0 == 8);
  REQUIRE(p.N == 4);
  REQUIRE(p.msgs_per_period == 10);
  REQUIRE(p.point.sdof == Rational(1, 2));
  REQUIRE(p.point.cdof == Rational(5, 2));

  TimPlan q = plan_regular(5, 2, true);
  REQUIRE(q.L == 3);
  REQUIRE(q.n_v == 5);
  REQUIRE(q.n0 == 1);
  REQUIRE(q.mprime == 1);
  REQUIRE(q.point.sdof == Rational(1, 3));
  REQUIRE(q.point.cdof == Rational(10, 3));

  REQUIRE_THROWS_AS(plan_regular(5, 1, false), infeasible_error);
  REQUIRE_THROWS_AS(plan_regular(5, 5, true), infeasible_error);
}

TEST_CASE("annihilator rows kill the communication span", "[tim]") {
  for (const TimPlan& p :
       {plan_antidote(5, 1, 2, false), plan_antidote(6, 2, 2, false),
        plan_antidote(5, 1, 1, true), plan_regular(5, 3, false),
        plan_regular(5, 2, true)}) {
    REQUIRE(p.V0.rows() == p.n0);
    REQUIRE(p.V0.cols() == p.L);
    // Orthonormal projection rows.
    REQUIRE((p.V0 * p.V0.adjoint() - MatC::Identity(p.n0, p.n0)).norm() < 1e-10);
    // Exact annihilation of every coding vector visible as interference.
    for (int idx : p.interf_idx)
      REQUIRE((p.V0 * p.V.col(idx - 1)).norm() < 1e-10);
    // Minimum-norm lift inverts the projection.
    REQUIRE((p.V0 * p.V0_pinv - MatC::Identity(p.n0, p.n0)).norm() < 1e-10);
    REQUIRE(static_cast<int>(p.interf_idx.size()) == p.L - p.n0);
  }
}

TEST_CASE("solved sensing signals reproduce the pilot entries", "[tim]") {
  // Substituting the minimum-norm waveform back into the null-row constraints
  // must return exactly the pilot values it was solved for.
  TimPlan p = plan_antidote(5, 1, 2, false);
  MatC X = generate_pilots(p.mprime, p.N);
  for (int per = 0; per < p.periods; ++per)
    for (int si = 0; si < p.mprime; ++si) {
      VecC c(p.n0);
      for (int u = 0; u < p.n0; ++u) c[u] = X(si, (per * p.n0 + u) % p.N);
      VecC xs = tim_sensing_waveform(p, c);
      REQUIRE((p.V0 * xs - c).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("every desired coding vector reaches its receiver privately", "[tim]") {
  for (const TimPlan& p : {plan_antidote(5, 1, 2, false), plan_regular(5, 3, false)}) {
    for (int k = 1; k <= p.topo.K; ++k) {
      for (const auto& des : p.rx_desired[k - 1]) {
        int hits = 0;
        for (int tx : p.topo.Rc[k - 1])
          for (const auto& term : p.tx_terms[tx - 1])
            if (term.v_idx == des.v_idx) ++hits;
        REQUIRE(hits == 1);
        REQUIRE(p.stream_rx[des.stream] == k);
      }
      // Used basis fits in a period, or decoding could not be well posed.
      REQUIRE(static_cast<int>(p.rx_used[k - 1].size()) <= p.L);
    }
    // Every receiver decodes the same number of streams.
    REQUIRE(static_cast<int>(p.stream_rx.size()) == p.msgs_per_period);
  }
}

TEST_CASE("connectivity scheme: noiseless decode is exact", "[tim]") {
  for (const TimPlan& plan :
       {plan_antidote(5, 1, 2, false), plan_antidote(5, 1, 1, true),
        plan_regular(5, 3, false), plan_regular(5, 2, true)}) {
    const int n_periods = 2;
    ChannelTensor ch = draw_channel(plan, plan.L * n_periods, 31);
    MatC X = generate_pilots(plan.mprime, plan.N);
    MatC msgs = random_qpsk(plan.msgs_per_period, n_periods, 81);
    TimBlock blk = encode_tim_block(plan, msgs, X, 2.0, 0.5);
    RxBlock rx = apply_channel(ch, blk.x);
    TimDecoder dec = make_tim_decoder(plan, ch, blk.c_amp);
    BiaDecodeResult res = tim_decode_receivers(plan, dec, ch, rx, blk);
    REQUIRE(res.ill_conditioned_solves == 0);
    REQUIRE((res.msgs_hat - msgs).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("sensor observations ignore the message symbols", "[tim]") {
  TimPlan plan = plan_antidote(5, 1, 2, false);
  const int n_periods = 2;
  ChannelTensor ch = draw_channel(plan, plan.L * n_periods, 32);
  MatC X = generate_pilots(plan.mprime, plan.N);
  MatC msgs = random_qpsk(plan.msgs_per_period, n_periods, 82);
  TimBlock blk = encode_tim_block(plan, msgs, X, 2.0, 0.5);
  RxBlock rx = apply_channel(ch, blk.x);
  SensingObservations obs = tim_sensor_observations(plan, rx, n_periods, plan.N);
  REQUIRE(obs.noise_multiplier == 1.0);
  REQUIRE(obs.value.size() == std::size_t(plan.n0 * n_periods));

  MatC hs(1, plan.mprime);
  for (int si = 0; si < plan.mprime; ++si)
    hs(0, si) = ch.at(ch.sensor_row(), plan.rs_order[si], 1)(0, 0);
  for (std::size_t i = 0; i < obs.value.size(); ++i) {
    cxd want = (hs * blk.Xs_eff.col(obs.column[i]))(0, 0);
    REQUIRE(std::abs(obs.value[i] - want) < 1e-12);
  }

  MatC msgs2 = msgs;
  msgs2(4, 1) += cxd(0.0, 1.0);
  TimBlock blk2 = encode_tim_block(plan, msgs2, X, 2.0, 0.5);
  RxBlock rx2 = apply_channel(ch, blk2.x);
  SensingObservations obs2 = tim_sensor_observations(plan, rx2, n_periods, plan.N);
  for (std::size_t i = 0; i < obs.value.size(); ++i)
    REQUIRE(std::abs(obs2.value[i] - obs.value[i]) < 1e-12);

  MatC hhat = sensing_ls(obs, blk.Xs_eff);
  REQUIRE((hhat - hs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("per-slot power stays inside the budget", "[tim]") {
  const double P = 2.0, split = 0.5;
  TimPlan plan = plan_antidote(5, 1, 2, false);
  MatC X = generate_pilots(plan.mprime, plan.N);
  const int n_periods = plan.N / plan.n0;  // one full pilot-column cycle

  // Sensing-only waveform: the per-transmitter peak meets Ps exactly.
  TimBlock zb = encode_tim_block(plan, MatC::Zero(plan.msgs_per_period, n_periods), X,
                                 P, split);
  double speak = 0.0;
  for (const auto& x : zb.x) speak = std::max(speak, x.cwiseAbs().maxCoeff());
  REQUIRE(speak * speak == Catch::Approx((1.0 - split) * P).margin(1e-12));

  // Expected comm power per transmitter and slot never exceeds Pc.
  double comm_peak_sq = 0.0;
  for (int j = 1; j <= plan.topo.n_tx; ++j)
    for (int t = 0; t < plan.L; ++t) {
      double s = 0.0;
      for (const auto& term : plan.tx_terms[j - 1])
        s += std::norm(plan.V(t, term.v_idx - 1));
      comm_peak_sq = std::max(comm_peak_sq, s);
    }
  REQUIRE(zb.c_amp * zb.c_amp * comm_peak_sq <= split * P + 1e-12);
}

TEST_CASE("plans are reproducible and seed-sensitive", "[tim]") {
  TimPlan a = plan_antidote(5, 1, 2, false, 7);
  TimPlan b = plan_antidote(5, 1, 2, false, 7);
  REQUIRE((a.V - b.V).norm() == 0.0);
  TimPlan c = plan_antidote(5, 1, 2, false, 8);
  REQUIRE((a.V - c.V).norm() > 1e-6);
}

TEST_CASE("encoder input validation", "[tim]") {
  TimPlan plan = plan_antidote(5, 1, 2, false);
  MatC X = generate_pilots(plan.mprime, plan.N);
  REQUIRE_THROWS_AS(encode_tim_block(plan, MatC::Zero(3, 1), X, 2.0, 0.5), config_error);
  MatC badX = generate_pilots(plan.mprime + 1, plan.N + 2);
  REQUIRE_THROWS_AS(encode_tim_block(plan, MatC::Zero(plan.msgs_per_period, 1), badX,
                                     2.0, 0.5),
                    config_error);
}

TEST_CASE("plan serialization carries the structure", "[tim]") {
  TimPlan p = plan_antidote(5, 1, 2, false);
  nlohmann::json j = tim_plan_to_json(p);
  REQUIRE(j["family"] == "tim_antidote");
  REQUIRE(j["L"] == 5);
  REQUIRE(j["n_annihilator_rows"] == 2);
  REQUIRE(j["mprime"] == 3);
  REQUIRE(j["topology"]["kind"] == "antidote_replace");
  REQUIRE(j["schedule"].size() == 6);
  REQUIRE(j["schedule"][5].empty());
}
