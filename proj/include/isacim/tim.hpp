#pragma once

// Connectivity-based interference management. All channels are constant over
// the block; the structure comes from the topology alone. Each transmitter
// spreads its message symbols along cyclic coding vectors over an L-slot
// period; the sensor projects its received block onto rows that annihilate
// the communication span it is exposed to, and the sensing waveforms are
// lifted through the minimum-norm right inverse of those rows so each
// projection returns one clean pilot value.

#include <algorithm>
#include <set>
#include <vector>

#include <nlohmann/json.hpp>

#include "isacim/bia.hpp"  // RxBlock, SensingObservations, apply_channel
#include "isacim/channel.hpp"
#include "isacim/common.hpp"
#include "isacim/dof.hpp"
#include "isacim/pilots.hpp"
#include "isacim/rng.hpp"
#include "isacim/topology.hpp"

namespace isacim {

struct TimTerm {
  int v_idx = 0;   // coding vector index, 1..n_v
  int stream = 0;  // message stream id, 0-based
};

struct TimPlan {
  TopologyGraph topo;
  SchemeFamily family = SchemeFamily::tim_antidote;
  bool add_mode = false;
  int L = 0;        // slots per period
  int n_v = 0;      // coding vectors
  int n0 = 0;       // annihilator rows = effective observations per period
  int mprime = 0;   // sensing-visible transmitters
  int periods = 0;  // minimum periods for an identifiable sensing block
  int t0 = 0;
  int N = 0;        // pilot columns per minimum block (n0 * periods)
  int msgs_per_period = 0;
  std::vector<int> rs_order;   // ascending sensing transmitter indices
  MatC V;                      // L x n_v, unit-norm coding vectors
  MatC V0;                     // n0 x L annihilator rows (orthonormal)
  MatC V0_pinv;                // L x n0 minimum-norm lift (V0 * V0_pinv = I)
  std::vector<std::vector<TimTerm>> tx_terms;  // per transmitter, 1-based outer
  std::vector<int> stream_rx;                  // stream -> owning receiver
  std::vector<int> interf_idx;                 // coding vectors seen as comm at sensor
  std::vector<std::vector<int>> rx_used;       // per receiver: sorted used v indices
  struct Desired {
    int stream = 0;
    int v_idx = 0;
    int tx = 0;
  };
  std::vector<std::vector<Desired>> rx_desired;
  TradeoffPoint point;
  int regen_count = 0;  // coding-vector sets discarded by the rank checks
};

namespace detail {

// All size-L (or full, if fewer) column subsets must be well separated; the
// annihilated span must have full column rank. Returns false on any failure.
inline bool coding_vectors_ok(const MatC& V, int L, const std::vector<std::vector<int>>& used_sets,
                              const std::vector<int>& interf_idx) {
  auto min_sv = [](const MatC& M) {
    Eigen::JacobiSVD<MatC> svd(M);
    return svd.singularValues()(svd.singularValues().size() - 1);
  };
  for (const auto& used : used_sets) {
    MatC B(L, used.size());
    for (std::size_t i = 0; i < used.size(); ++i) B.col(i) = V.col(used[i] - 1);
    if (static_cast<int>(used.size()) > L) return false;
    if (min_sv(B) < 1e-8) return false;
  }
  if (!interf_idx.empty()) {
    MatC M(L, interf_idx.size());
    for (std::size_t i = 0; i < interf_idx.size(); ++i) M.col(i) = V.col(interf_idx[i] - 1);
    if (min_sv(M) < 1e-8) return false;
  }
  return true;
}

inline MatC left_null_rows(const MatC& M, int expected, int L) {
  if (M.cols() == 0) {
    // Nothing to annihilate: any orthonormal rows will do; use the canonical ones.
    return MatC::Identity(expected, L);
  }
  Eigen::JacobiSVD<MatC> svd(M, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * sv(0)) ++rank;
  if (L - rank != expected)
    throw numeric_error("annihilator construction: unexpected interference rank");
  MatC rows = svd.matrixU().rightCols(expected).adjoint();
  for (int r = 0; r < rows.rows(); ++r) {
    VecC row = rows.row(r).transpose();
    fix_phase(row);
    rows.row(r) = row.transpose();
  }
  return rows;
}

}  // namespace detail

// Finish a plan whose topology, schedule and counts are filled in: draws the
// coding vectors, builds the annihilator, and runs the structural checks.
inline void tim_finalize(TimPlan& p, std::uint64_t seed) {
  p.mprime = static_cast<int>(p.rs_order.size());
  if (p.mprime < 1)
    throw infeasible_error("plan: sensor is not connected to any transmitter");
  // Interference at the sensor: every coding vector carried by a
  // sensing-connected transmitter.
  {
    std::set<int> s;
    for (int tx : p.topo.Rs)
      for (const auto& term : p.tx_terms[tx - 1]) s.insert(term.v_idx);
    p.interf_idx.assign(s.begin(), s.end());
  }
  // Per-receiver used basis and desired positions.
  p.rx_used.assign(p.topo.K, {});
  p.rx_desired.assign(p.topo.K, {});
  for (int k = 1; k <= p.topo.K; ++k) {
    std::set<int> used;
    for (int tx : p.topo.Rc[k - 1])
      for (const auto& term : p.tx_terms[tx - 1]) {
        used.insert(term.v_idx);
        if (p.stream_rx[term.stream] == k)
          p.rx_desired[k - 1].push_back({term.stream, term.v_idx, tx});
      }
    p.rx_used[k - 1].assign(used.begin(), used.end());
    if (static_cast<int>(used.size()) > p.L)
      throw numeric_error("plan schedule: receiver coding basis exceeds the period length");
    // Every desired coding vector must be used by exactly one connected term,
    // or the coefficient would mix foreign symbols.
    for (const auto& des : p.rx_desired[k - 1]) {
      int hits = 0;
      for (int tx : p.topo.Rc[k - 1])
        for (const auto& term : p.tx_terms[tx - 1])
          if (term.v_idx == des.v_idx) ++hits;
      if (hits != 1)
        throw numeric_error("plan schedule: desired coding vector is not private");
    }
  }
  if (static_cast<int>(p.interf_idx.size()) != p.L - p.n0)
    throw numeric_error("plan schedule: interference span size disagrees with annihilator count");

  // Draw unit-norm coding vectors until the independence checks pass.
  PhiloxStream rng(seed, StreamPurpose::plan, 0, 0);
  p.regen_count = 0;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 256) throw numeric_error("coding vector draws keep failing rank checks");
    MatC V(p.L, p.n_v);
    for (int c = 0; c < p.n_v; ++c) {
      VecC v(p.L);
      for (int r = 0; r < p.L; ++r) v[r] = rng.cgauss();
      v.normalize();
      V.col(c) = v;
    }
    if (detail::coding_vectors_ok(V, p.L, p.rx_used, p.interf_idx)) {
      p.V = V;
      break;
    }
    ++p.regen_count;
  }
  MatC M(p.L, p.interf_idx.size());
  for (std::size_t i = 0; i < p.interf_idx.size(); ++i)
    M.col(i) = p.V.col(p.interf_idx[i] - 1);
  p.V0 = detail::left_null_rows(M, p.n0, p.L);
  p.V0_pinv = p.V0.adjoint() * (p.V0 * p.V0.adjoint()).inverse();

  p.periods = ceil_div(p.mprime, p.n0);
  p.t0 = p.L * p.periods;
  p.N = p.n0 * p.periods;

  // Counting must reproduce the closed-form point exactly.
  if (Rational(p.n0, p.L) != p.point.sdof ||
      Rational(p.msgs_per_period, p.L) != p.point.cdof)
    throw numeric_error("plan counting disagrees with the closed-form trade-off point");
}

inline TimPlan plan_antidote(int K, int U, int D, bool add_mode, std::uint64_t seed = 1,
                             int anchor = 1) {
  TimPlan p;
  p.family = SchemeFamily::tim_antidote;
  p.add_mode = add_mode;
  p.topo = add_mode ? build_topology_antidote_add(K, U, D, anchor)
                    : build_topology_antidote_replace(K, U, D);
  p.L = add_mode ? (K - D + U) : (K - D + U + 1);
  p.n_v = add_mode ? K : (K + U);
  p.n0 = U + 1;
  p.msgs_per_period = K * (U + 1);
  p.rs_order = p.topo.Rs;
  p.stream_rx.resize(p.msgs_per_period);
  p.tx_terms.assign(p.topo.n_tx, {});
  for (int i = 1; i <= K; ++i) {
    for (int u = 0; u <= U; ++u) {
      int stream = (i - 1) * (U + 1) + u;
      p.stream_rx[stream] = i;
      int v = add_mode ? cyclic_residue(i + u, K) : (i + u);
      p.tx_terms[i - 1].push_back({v, stream});
    }
  }
  // replace mode: transmitter K+1 carries sensing only (no terms).
  SchemeParams sp;
  sp.family = SchemeFamily::tim_antidote;
  sp.K = K;
  sp.U = U;
  sp.D = D;
  sp.add_mode = add_mode;
  p.point = scheme_point(sp);
  tim_finalize(p, seed);
  return p;
}

inline TimPlan plan_regular(int K, int d, bool add_mode, std::uint64_t seed = 1,
                            int anchor = 1) {
  if (d < 2)
    throw infeasible_error("plan_regular: need d >= 2 (each receiver must hear a neighbor)");
  if (add_mode && d > K - 1)
    throw infeasible_error(
        "plan_regular: add mode needs d <= K-1 (cyclic message reuse collides at d = K)");
  TimPlan p;
  p.family = SchemeFamily::tim_regular;
  p.add_mode = add_mode;
  p.topo = add_mode ? build_topology_regular_add(K, d, anchor)
                    : build_topology_regular_replace(K, d);
  int n_cyc = add_mode ? K : (K + 1);  // coding vector index modulus
  p.L = d + 1;
  p.n_v = n_cyc;
  p.n0 = add_mode ? 1 : 2;
  p.msgs_per_period = 2 * K;
  p.rs_order = p.topo.Rs;
  p.stream_rx.resize(p.msgs_per_period);
  p.tx_terms.assign(p.topo.n_tx, {});
  // Stream ids: first batch 0..K-1, second batch K..2K-1, receiver k owns
  // streams k-1 and K+k-1. Transmitters are cooperative: transmitter j sends
  // the first message of receiver j on v^[j], and the second message of
  // receiver sigma(j) = <j-d+1> on v^[<j+1>]; indices where sigma lands on the
  // sensing transmitter simply drop that term.
  for (int k = 1; k <= K; ++k) {
    p.stream_rx[k - 1] = k;
    p.stream_rx[K + k - 1] = k;
  }
  for (int j = 1; j <= p.topo.n_tx; ++j) {
    if (j <= K) p.tx_terms[j - 1].push_back({j, j - 1});
    int sig = cyclic_residue(j - d + 1, n_cyc);
    if (sig <= K)
      p.tx_terms[j - 1].push_back({cyclic_residue(j + 1, n_cyc), K + sig - 1});
  }
  SchemeParams sp;
  sp.family = SchemeFamily::tim_regular;
  sp.K = K;
  sp.d = d;
  sp.add_mode = add_mode;
  p.point = scheme_point(sp);
  tim_finalize(p, seed);
  return p;
}

// --- encoding ---------------------------------------------------------------

struct TimBlock {
  std::vector<VecC> x;  // per slot: stacked transmit vector, dim n_tx
  MatC Xs_eff;          // mprime x N sensing pilots with amplitude applied
  double c_amp = 0.0;
  double s_amp = 0.0;
  int n_periods = 0;
};

// Sensing waveform of sensing-transmitter index si (0-based within rs_order)
// for pilot values c (n0-vector): the minimum-norm L-slot signal whose
// annihilator projections reproduce c exactly.
inline VecC tim_sensing_waveform(const TimPlan& plan, const VecC& c) {
  return plan.V0_pinv * c;
}

// Peak per-transmitter amplitudes for power normalization, computed over one
// full pilot-column cycle.
inline void tim_peaks(const TimPlan& plan, const MatC& X, double& comm_peak_sq,
                      double& sens_peak) {
  comm_peak_sq = 0.0;
  for (int j = 1; j <= plan.topo.n_tx; ++j) {
    for (int t = 0; t < plan.L; ++t) {
      double s = 0.0;
      for (const auto& term : plan.tx_terms[j - 1])
        s += std::norm(plan.V(t, term.v_idx - 1));
      comm_peak_sq = std::max(comm_peak_sq, s);
    }
  }
  sens_peak = 0.0;
  int N = static_cast<int>(X.cols());
  int cycle = N / plan.n0;
  for (int p = 0; p < cycle; ++p) {
    for (int si = 0; si < plan.mprime; ++si) {
      VecC c(plan.n0);
      for (int u = 0; u < plan.n0; ++u) c[u] = X(si, (p * plan.n0 + u) % N);
      VecC xs = tim_sensing_waveform(plan, c);
      sens_peak = std::max(sens_peak, xs.cwiseAbs().maxCoeff());
    }
  }
}

// Transmit a block of n_periods periods. msgs: msgs_per_period x n_periods,
// unit-average-power symbols. Expected per-slot power of every transmitter
// stays within P = Pc + Ps by peak normalization of both components.
inline TimBlock encode_tim_block(const TimPlan& plan, const MatC& msgs, const MatC& X,
                                 double P, double split) {
  if (msgs.rows() != plan.msgs_per_period)
    throw config_error("encode_tim_block: message rows disagree with plan");
  if (X.rows() != plan.mprime)
    throw config_error("encode_tim_block: pilot rows disagree with plan");
  int n_periods = static_cast<int>(msgs.cols());
  int N = static_cast<int>(X.cols());
  double Pc = split * P;
  double Ps = (1.0 - split) * P;
  double comm_peak_sq, sens_peak;
  tim_peaks(plan, X, comm_peak_sq, sens_peak);

  TimBlock blk;
  blk.n_periods = n_periods;
  blk.c_amp = comm_peak_sq > 0 ? std::sqrt(Pc / comm_peak_sq) : 0.0;
  blk.s_amp = sens_peak > 0 ? std::sqrt(Ps) / sens_peak : 0.0;
  blk.Xs_eff = blk.s_amp * X;
  blk.x.assign(static_cast<std::size_t>(n_periods) * plan.L, VecC());

  // Map transmitter -> sensing row (or -1).
  std::vector<int> srow(plan.topo.n_tx + 1, -1);
  for (int si = 0; si < plan.mprime; ++si) srow[plan.rs_order[si]] = si;

  for (int p = 1; p <= n_periods; ++p) {
    // Per-transmitter L-slot waveforms for this period.
    MatC xper = MatC::Zero(plan.L, plan.topo.n_tx);
    for (int j = 1; j <= plan.topo.n_tx; ++j) {
      VecC xj = VecC::Zero(plan.L);
      for (const auto& term : plan.tx_terms[j - 1])
        xj += blk.c_amp * plan.V.col(term.v_idx - 1) * msgs(term.stream, p - 1);
      if (srow[j] >= 0) {
        VecC c(plan.n0);
        for (int u = 0; u < plan.n0; ++u)
          c[u] = blk.Xs_eff(srow[j], ((p - 1) * plan.n0 + u) % N);
        xj += tim_sensing_waveform(plan, c);
      }
      xper.col(j - 1) = xj;
    }
    for (int t = 1; t <= plan.L; ++t)
      blk.x[(p - 1) * plan.L + (t - 1)] = xper.row(t - 1).transpose();
  }
  return blk;
}

// --- decoding ----------------------------------------------------------------

struct TimDecoder {
  // Per receiver: pseudo-inverse of the used coding basis, positions of the
  // desired vectors inside it, and the per-stream channel gains.
  struct RxOp {
    MatC B_pinv;               // u x L
    std::vector<int> pos;      // per desired: column position in used basis
    std::vector<cxd> gain;     // per desired: c_amp * h_{k,tx}
    std::vector<int> stream;   // per desired: stream id
    int interference_rank = 0;
    double margin = 0.0;       // smallest singular value of the used basis
  };
  std::vector<RxOp> ops;
  int ill_conditioned = 0;
};

inline TimDecoder make_tim_decoder(const TimPlan& plan, const ChannelTensor& ch,
                                   double c_amp) {
  TimDecoder dec;
  dec.ops.resize(plan.topo.K);
  for (int k = 1; k <= plan.topo.K; ++k) {
    auto& op = dec.ops[k - 1];
    const auto& used = plan.rx_used[k - 1];
    MatC B(plan.L, used.size());
    for (std::size_t i = 0; i < used.size(); ++i) B.col(i) = plan.V.col(used[i] - 1);
    Eigen::JacobiSVD<MatC> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    op.margin = sv(sv.size() - 1);
    if (op.margin <= 0.0 || sv(0) / op.margin > 1e12) ++dec.ill_conditioned;
    // Least-squares coefficient extraction doubles as the fallback.
    op.B_pinv = svd.matrixV() *
                sv.cwiseMax(1e-300).cwiseInverse().asDiagonal() *
                svd.matrixU().adjoint();
    std::set<int> desired_set;
    for (const auto& des : plan.rx_desired[k - 1]) {
      auto it = std::lower_bound(used.begin(), used.end(), des.v_idx);
      op.pos.push_back(static_cast<int>(it - used.begin()));
      op.gain.push_back(c_amp * ch.at(k, des.tx, 1)(0, 0));
      op.stream.push_back(des.stream);
      desired_set.insert(des.v_idx);
    }
    op.interference_rank = static_cast<int>(used.size() - desired_set.size());
  }
  return dec;
}

// Decode all receivers over the block: subtract the (public) sensing
// component exactly, project onto the used coding basis, divide by the
// desired gains.
inline BiaDecodeResult tim_decode_receivers(const TimPlan& plan, const TimDecoder& dec,
                                            const ChannelTensor& ch, const RxBlock& rx,
                                            const TimBlock& blk) {
  int n_periods = blk.n_periods;
  int N = static_cast<int>(blk.Xs_eff.cols());
  BiaDecodeResult res;
  res.msgs_hat = MatC::Zero(plan.msgs_per_period, n_periods);
  res.ill_conditioned_solves = dec.ill_conditioned;

  std::vector<int> srow(plan.topo.n_tx + 1, -1);
  for (int si = 0; si < plan.mprime; ++si) srow[plan.rs_order[si]] = si;

  for (int k = 1; k <= plan.topo.K; ++k) {
    const auto& op = dec.ops[k - 1];
    // Known sensing contribution at receiver k for one period, as a function
    // of the period's pilot columns; channel is block-constant.
    for (int p = 1; p <= n_periods; ++p) {
      VecC y(plan.L);
      for (int t = 1; t <= plan.L; ++t) y[t - 1] = rx.y[k - 1][(p - 1) * plan.L + (t - 1)][0];
      for (int tx : plan.topo.Rc[k - 1]) {
        if (srow[tx] < 0) continue;
        VecC c(plan.n0);
        for (int u = 0; u < plan.n0; ++u)
          c[u] = blk.Xs_eff(srow[tx], ((p - 1) * plan.n0 + u) % N);
        y -= ch.at(k, tx, 1)(0, 0) * tim_sensing_waveform(plan, c);
      }
      VecC coeff = op.B_pinv * y;
      for (std::size_t idx = 0; idx < op.pos.size(); ++idx)
        res.msgs_hat(op.stream[idx], p - 1) = coeff[op.pos[idx]] / op.gain[idx];
    }
  }
  return res;
}

// --- sensing observations -----------------------------------------------------

// Annihilator projections of the sensor's received block: n0 clean pilot
// observations per period, mapped to their pilot columns. The projection rows
// are orthonormal, so the effective noise variance is unchanged.
inline SensingObservations tim_sensor_observations(const TimPlan& plan, const RxBlock& rx,
                                                   int n_periods, int N) {
  SensingObservations obs;
  obs.noise_multiplier = 1.0;
  const auto& ys = rx.y.back();
  for (int p = 1; p <= n_periods; ++p) {
    VecC y(plan.L);
    for (int t = 1; t <= plan.L; ++t) y[t - 1] = ys[(p - 1) * plan.L + (t - 1)][0];
    VecC proj = plan.V0 * y;
    for (int u = 0; u < plan.n0; ++u) {
      obs.value.push_back(proj[u]);
      obs.column.push_back(((p - 1) * plan.n0 + u) % N);
    }
  }
  return obs;
}

inline nlohmann::json tim_plan_to_json(const TimPlan& p) {
  nlohmann::json j;
  j["family"] = to_string(p.family);
  j["topology"] = topology_to_json(p.topo);
  j["add_mode"] = p.add_mode;
  j["L"] = p.L;
  j["n_coding_vectors"] = p.n_v;
  j["n_annihilator_rows"] = p.n0;
  j["mprime"] = p.mprime;
  j["periods"] = p.periods;
  j["t0"] = p.t0;
  j["N"] = p.N;
  j["msgs_per_period"] = p.msgs_per_period;
  j["point"] = {p.point.sdof.num, p.point.sdof.den, p.point.cdof.num, p.point.cdof.den};
  j["schedule"] = nlohmann::json::array();
  for (std::size_t tx = 0; tx < p.tx_terms.size(); ++tx) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : p.tx_terms[tx])
      terms.push_back({{"v", t.v_idx}, {"stream", t.stream}});
    j["schedule"].push_back(terms);
  }
  j["regen_count"] = p.regen_count;
  return j;
}

}  // namespace isacim
