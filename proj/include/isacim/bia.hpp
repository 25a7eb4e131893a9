#pragma once

// Coherence-time interference alignment ("blind" schemes). Communication
// symbols are held constant across each period while the comm channels fade
// per slot; the sensing channel is constant over the whole block. Slot
// differences taken at the sensor therefore cancel every communication term
// exactly, leaving clean pilot observations, while each receiver decodes its
// messages by zero-forcing across the period (IC) or through per-slot
// null-space precoders (MISO/MIMO).
//
// Three variants share one plan type:
//   ic   — K single-antenna transmitter/receiver pairs, fully connected.
//   miso — one m-antenna transmitter, K single-antenna receivers, m > K.
//   mimo — one m-antenna transmitter, receiver k with n_k antennas,
//          m > sum(n_k), n nonincreasing.

#include <vector>

#include <nlohmann/json.hpp>

#include "isacim/channel.hpp"
#include "isacim/common.hpp"
#include "isacim/dof.hpp"
#include "isacim/pilots.hpp"

namespace isacim {

// One message stream: delivered to receiver `rx` in round `round` of each
// period; `width` symbols per period (receive-antenna streams bundle).
struct BiaStream {
  int round = 1;  // 1..a
  int rx = 1;     // 1..K
  int width = 1;  // symbols carried (n_k, or q in a partial final round)
};

struct BiaPlan {
  SchemeFamily family = SchemeFamily::bia_ic;
  int K = 0;
  int m = 0;               // transmit dimension visible to the sensor (K for ic)
  std::vector<int> n;      // receive antennas per user
  int a = 0;               // slots per period
  int periods = 0;         // minimum periods for an identifiable sensing block
  int t0 = 0;              // a * periods
  int n_obs_per_period = 0;  // a - 1
  int N = 0;               // pilot columns per minimum block
  int msgs_per_period = 0;   // total symbols decoded per period (= m for all variants)
  MatD pattern;            // a x (a-1) sensing activation (row 1 all ones)
  std::vector<BiaStream> streams;
  // mimo round structure: S full receivers and q extra streams in the final round
  int last_round_S = 0;
  int last_round_q = 0;
  TradeoffPoint point;
};

namespace detail {

inline MatD sensing_pattern(int a) {
  // Row 1 transmits every pilot column of the period; row t >= 2 mutes column
  // t-1, so the difference slot1 - slott isolates exactly that column.
  MatD P = MatD::Ones(a, a - 1);
  for (int t = 2; t <= a; ++t) P(t - 1, t - 2) = 0.0;
  return P;
}

inline void fix_phase(VecC& v) {
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      cxd ph = v[i] / std::abs(v[i]);
      v /= ph;
      return;
    }
  }
}

}  // namespace detail

inline BiaPlan plan_ic(int K) {
  if (K < 2) throw infeasible_error("plan_ic: need at least 2 users");
  BiaPlan p;
  p.family = SchemeFamily::bia_ic;
  p.K = K;
  p.m = K;
  p.n.assign(K, 1);
  p.a = K;
  p.n_obs_per_period = K - 1;
  p.periods = 2;  // smallest block with N = 2K-2 >= K pilot columns
  p.t0 = 2 * K;
  p.N = 2 * (K - 1);
  p.msgs_per_period = K;
  p.pattern = detail::sensing_pattern(p.a);
  for (int k = 1; k <= K; ++k) p.streams.push_back({1, k, 1});
  SchemeParams sp;
  sp.family = SchemeFamily::bia_ic;
  sp.K = K;
  p.point = scheme_point(sp);
  return p;
}

namespace detail {

// Shared miso/mimo skeleton: rounds of streams ordered (round, receiver).
inline BiaPlan plan_broadcast(SchemeFamily fam, int m, const std::vector<int>& n) {
  if (n.empty()) throw config_error("plan: need at least one receiver");
  int K = static_cast<int>(n.size());
  int sum_n = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] < 1) throw config_error("plan: receive antenna counts must be >= 1");
    if (i > 0 && n[i] > n[i - 1])
      throw config_error("plan: receive antenna counts must be nonincreasing");
    sum_n += n[i];
  }
  if (m <= sum_n)
    throw infeasible_error(
        "plan: need more transmit antennas than total receive antennas (m > " +
        std::to_string(sum_n) + ")");
  BiaPlan p;
  p.family = fam;
  p.K = K;
  p.m = m;
  p.n = n;
  p.a = ceil_div(m, sum_n);
  p.n_obs_per_period = p.a - 1;
  int rem = m - (p.a - 1) * sum_n;  // streams carried by the final round, 1..sum_n
  int S = 0, acc = 0;
  while (S < K && acc + n[S] <= rem) acc += n[S++];
  int q = rem - acc;
  p.last_round_S = S;
  p.last_round_q = q;
  for (int t = 1; t < p.a; ++t)
    for (int k = 1; k <= K; ++k) p.streams.push_back({t, k, n[k - 1]});
  for (int k = 1; k <= S; ++k) p.streams.push_back({p.a, k, n[k - 1]});
  if (q > 0) p.streams.push_back({p.a, S + 1, q});
  p.msgs_per_period = m;
  p.periods = ceil_div(m, p.a - 1);
  p.t0 = p.a * p.periods;
  p.N = p.n_obs_per_period * p.periods;
  p.pattern = sensing_pattern(p.a);
  SchemeParams sp;
  sp.family = fam;
  sp.K = K;
  sp.m = m;
  sp.n = n;
  p.point = scheme_point(sp);
  return p;
}

}  // namespace detail

inline BiaPlan plan_miso(int m, int K) {
  if (K < 1) throw config_error("plan_miso: need K >= 1");
  if (m <= K) throw infeasible_error("plan_miso: need m > K; single-antenna rounds cover everyone");
  return detail::plan_broadcast(SchemeFamily::bia_miso, m, std::vector<int>(K, 1));
}

inline BiaPlan plan_mimo(int m, const std::vector<int>& n) {
  return detail::plan_broadcast(SchemeFamily::bia_mimo, m, n);
}

// --- per-period precoders (miso/mimo) --------------------------------------
//
// For stream (t, k) the precoder columns span the null space of every other
// protected channel row in the period: all receivers' rows in full rounds,
// plus the rows actually served in the final round. The stream's own rows are
// excluded, leaving a null space of exactly the stream width for a generic
// channel draw.

struct BiaPeriodPrecoders {
  // precoder[s]: m x width matrix for plan.streams[s]
  std::vector<MatC> precoder;
};

// Build the (rows x m) matrix of protected rows for the given period, tagging
// each row with its owning stream index.
inline BiaPeriodPrecoders bia_period_precoders(const BiaPlan& plan, const ChannelTensor& ch,
                                               int period) {
  if (plan.family == SchemeFamily::bia_ic)
    return {};  // ic uses joint ZF at each receiver, no transmit precoding
  int base = (period - 1) * plan.a;
  struct RowRef {
    int stream;
    VecC row;
  };
  std::vector<RowRef> rows;
  for (std::size_t s = 0; s < plan.streams.size(); ++s) {
    const auto& st = plan.streams[s];
    const MatC& Hk = ch.at(st.rx, 1, base + st.round);  // single transmit node
    for (int r = 0; r < st.width; ++r)
      rows.push_back({static_cast<int>(s), Hk.row(r)});
  }
  if (static_cast<int>(rows.size()) != plan.m)
    throw numeric_error("bia precoders: protected rows do not match transmit dimension");

  BiaPeriodPrecoders out;
  out.precoder.resize(plan.streams.size());
  for (std::size_t s = 0; s < plan.streams.size(); ++s) {
    int width = plan.streams[s].width;
    MatC E(plan.m - width, plan.m);
    int r = 0;
    for (const auto& rr : rows)
      if (rr.stream != static_cast<int>(s)) E.row(r++) = rr.row;
    Eigen::JacobiSVD<MatC> svd(E, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // Exclusion rows must be independent, or the null space is wider than the
    // stream and the draw is degenerate.
    if (sv(sv.size() - 1) <= 1e-10 * sv(0))
      throw numeric_error("degenerate channel draw while building null-space precoders");
    MatC V = svd.matrixV().rightCols(width);
    for (int c = 0; c < width; ++c) {
      VecC col = V.col(c);
      detail::fix_phase(col);
      V.col(c) = col;
    }
    out.precoder[s] = V;
  }
  return out;
}

// --- encoding ----------------------------------------------------------------

struct BiaBlock {
  std::vector<VecC> x;   // per slot (1..n_periods*a): stacked transmit vector, dim m
  MatC Xs_eff;           // m x N: sensing columns with amplitude applied
  double c_amp = 0.0;
  double s_amp = 0.0;
  int n_periods = 0;
};

// Peak per-transmitter sensing amplitude over one full pilot-column cycle.
inline double bia_sensing_peak(const BiaPlan& plan, const MatC& X) {
  int N = static_cast<int>(X.cols());
  double peak = 0.0;
  int cycles = N / plan.n_obs_per_period;  // pattern cycle aligns with column cycle
  for (int p = 0; p < cycles; ++p) {
    for (int t = 1; t <= plan.a; ++t) {
      VecC xs = VecC::Zero(X.rows());
      for (int j = 1; j <= plan.n_obs_per_period; ++j) {
        int col = (p * plan.n_obs_per_period + (j - 1)) % N;
        xs += plan.pattern(t - 1, j - 1) * X.col(col);
      }
      if (plan.family == SchemeFamily::bia_ic) {
        peak = std::max(peak, xs.cwiseAbs().maxCoeff());  // per single-antenna node
      } else {
        peak = std::max(peak, xs.norm());  // per m-antenna transmitter
      }
    }
  }
  return peak;
}

// Transmit a block of `n_periods` periods. msgs is (msgs_per_period x
// n_periods) with unit-average-power symbols; pilot columns cycle through X.
// Power budget P per transmitter, split Pc = split*P for communication and
// Ps = (1-split)*P for sensing; the expected per-slot transmit power of each
// transmitter stays within P.
inline BiaBlock encode_block(const BiaPlan& plan,
                             const std::vector<BiaPeriodPrecoders>& precoders,
                             const MatC& msgs, const MatC& X, double P, double split) {
  int n_periods = static_cast<int>(msgs.cols());
  if (msgs.rows() != plan.msgs_per_period)
    throw config_error("encode_block: message rows disagree with plan");
  if (X.rows() != plan.m) throw config_error("encode_block: pilot rows disagree with plan");
  if (plan.family != SchemeFamily::bia_ic &&
      static_cast<int>(precoders.size()) < n_periods)
    throw config_error("encode_block: need precoders for every period");
  double Pc = split * P;
  double Ps = (1.0 - split) * P;

  BiaBlock blk;
  blk.n_periods = n_periods;
  int N = static_cast<int>(X.cols());
  double peak = bia_sensing_peak(plan, X);
  blk.s_amp = peak > 0 ? std::sqrt(Ps) / peak : 0.0;
  blk.c_amp = plan.family == SchemeFamily::bia_ic ? std::sqrt(Pc)
                                                  : std::sqrt(Pc / plan.m);
  blk.Xs_eff = blk.s_amp * X;
  blk.x.assign(static_cast<std::size_t>(n_periods) * plan.a, VecC());

  for (int p = 1; p <= n_periods; ++p) {
    // Communication part is constant across the period.
    VecC xc = VecC::Zero(plan.m);
    if (plan.family == SchemeFamily::bia_ic) {
      for (int k = 1; k <= plan.K; ++k) xc[k - 1] = blk.c_amp * msgs(k - 1, p - 1);
    } else {
      int row = 0;
      for (std::size_t s = 0; s < plan.streams.size(); ++s) {
        const MatC& V = precoders[p - 1].precoder[s];
        xc += blk.c_amp * V * msgs.block(row, p - 1, plan.streams[s].width, 1);
        row += plan.streams[s].width;
      }
    }
    for (int t = 1; t <= plan.a; ++t) {
      VecC xs = VecC::Zero(plan.m);
      for (int j = 1; j <= plan.n_obs_per_period; ++j) {
        int col = ((p - 1) * plan.n_obs_per_period + (j - 1)) % N;
        xs += plan.pattern(t - 1, j - 1) * blk.Xs_eff.col(col);
      }
      blk.x[(p - 1) * plan.a + (t - 1)] = xc + xs;
    }
  }
  return blk;
}

// --- receive-side plumbing ----------------------------------------------------

struct RxBlock {
  // y[row-1][t-1]: received vector at row (receivers 1..K, sensor last)
  std::vector<std::vector<VecC>> y;
};

// Noiseless propagation of stacked transmit vectors through the channel.
// x[t] is the concatenation over transmit nodes of their antenna vectors.
inline RxBlock apply_channel(const ChannelTensor& ch, const std::vector<VecC>& x) {
  RxBlock rx;
  int T = static_cast<int>(x.size());
  if (T > ch.t0) throw config_error("apply_channel: more slots than channel block");
  rx.y.resize(ch.n_rx);
  std::vector<int> off(ch.n_tx + 1, 0);
  for (int i = 0; i < ch.n_tx; ++i) off[i + 1] = off[i] + ch.tx_ant[i];
  for (int row = 1; row <= ch.n_rx; ++row) {
    rx.y[row - 1].resize(T);
    for (int t = 1; t <= T; ++t) {
      VecC acc = VecC::Zero(ch.rx_ant[row - 1]);
      for (int tx = 1; tx <= ch.n_tx; ++tx)
        acc += ch.at(row, tx, t) * x[t - 1].segment(off[tx - 1], ch.tx_ant[tx - 1]);
      rx.y[row - 1][t - 1] = acc;
    }
  }
  return rx;
}

inline void add_noise(RxBlock& rx, const std::vector<double>& sigma_per_row,
                      PhiloxStream& rng) {
  for (std::size_t row = 0; row < rx.y.size(); ++row) {
    double s = sigma_per_row[row];
    for (auto& v : rx.y[row])
      for (int i = 0; i < v.size(); ++i) v[i] += s * rng.cgauss();
  }
}

// --- decoding -------------------------------------------------------------------

struct BiaDecodeResult {
  MatC msgs_hat;                    // msgs_per_period x n_periods
  int ill_conditioned_solves = 0;   // joint solves that fell back to least squares
};

// Decode all receivers over the block. The sensing component is subtracted
// exactly (its schedule and pilot values are public), then each period is
// solved: IC by a K x K zero-forcing system per receiver, MISO/MIMO by the
// per-stream square system H V. Condition numbers above 1e12 are flagged and
// solved in the least-squares sense instead.
inline BiaDecodeResult decode_receivers(const BiaPlan& plan,
                                        const std::vector<BiaPeriodPrecoders>& precoders,
                                        const ChannelTensor& ch, const RxBlock& rx,
                                        const BiaBlock& blk) {
  int n_periods = blk.n_periods;
  int N = static_cast<int>(blk.Xs_eff.cols());
  BiaDecodeResult res;
  res.msgs_hat = MatC::Zero(plan.msgs_per_period, n_periods);

  auto sensing_part = [&](int row, int p, int t) {
    // Known contribution of the sensing waveform at this receiver row/slot.
    VecC xs = VecC::Zero(plan.m);
    for (int j = 1; j <= plan.n_obs_per_period; ++j) {
      int col = ((p - 1) * plan.n_obs_per_period + (j - 1)) % N;
      xs += plan.pattern(t - 1, j - 1) * blk.Xs_eff.col(col);
    }
    if (plan.family == SchemeFamily::bia_ic) {
      VecC acc = VecC::Zero(ch.rx_ant[row - 1]);
      for (int tx = 1; tx <= ch.n_tx; ++tx)
        acc += ch.at(row, tx, (p - 1) * plan.a + t) * xs.segment(tx - 1, 1);
      return acc;
    }
    VecC acc = ch.at(row, 1, (p - 1) * plan.a + t) * xs;
    return acc;
  };

  for (int p = 1; p <= n_periods; ++p) {
    if (plan.family == SchemeFamily::bia_ic) {
      for (int k = 1; k <= plan.K; ++k) {
        MatC A(plan.a, plan.K);
        VecC b(plan.a);
        for (int t = 1; t <= plan.a; ++t) {
          for (int i = 1; i <= plan.K; ++i)
            A(t - 1, i - 1) = blk.c_amp * ch.at(k, i, (p - 1) * plan.a + t)(0, 0);
          b[t - 1] = rx.y[k - 1][(p - 1) * plan.a + (t - 1)][0] - sensing_part(k, p, t)[0];
        }
        Eigen::JacobiSVD<MatC> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > 1e12)
          ++res.ill_conditioned_solves;
        VecC w = svd.solve(b);
        // Receiver k keeps its own message; every stream is owned by one rx.
        res.msgs_hat(k - 1, p - 1) = w[k - 1];
      }
    } else {
      int row0 = 0;
      for (std::size_t s = 0; s < plan.streams.size(); ++s) {
        const auto& st = plan.streams[s];
        const MatC& V = precoders[p - 1].precoder[s];
        MatC Hk = ch.at(st.rx, 1, (p - 1) * plan.a + st.round);
        VecC yk = rx.y[st.rx - 1][(p - 1) * plan.a + (st.round - 1)] -
                  sensing_part(st.rx, p, st.round);
        // Square system on the stream's protected rows (first `width` rows).
        MatC A = blk.c_amp * Hk.topRows(st.width) * V;
        VecC b = yk.head(st.width);
        Eigen::JacobiSVD<MatC> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > 1e12)
          ++res.ill_conditioned_solves;
        res.msgs_hat.block(row0, p - 1, st.width, 1) = svd.solve(b);
        row0 += st.width;
      }
    }
  }
  return res;
}

// --- sensing observations ---------------------------------------------------------

struct SensingObservations {
  std::vector<cxd> value;  // effective observation per pilot column use
  std::vector<int> column; // pilot column index (0-based, cycles mod N)
  double noise_multiplier = 2.0;  // each difference carries two noise draws
};

// Slot differences against the first slot of each period: comm terms are
// constant within a period and the sensing channel is block-constant, so
// e_{p,j} = h_s * Xs_eff(:, col) + (z(1) - z(1+j)).
inline SensingObservations sensor_observations(const BiaPlan& plan, const RxBlock& rx,
                                               int n_periods, int N) {
  SensingObservations obs;
  const auto& ys = rx.y.back();
  for (int p = 1; p <= n_periods; ++p) {
    int base = (p - 1) * plan.a;
    for (int j = 1; j <= plan.n_obs_per_period; ++j) {
      obs.value.push_back(ys[base][0] - ys[base + j][0]);
      obs.column.push_back(((p - 1) * plan.n_obs_per_period + (j - 1)) % N);
    }
  }
  return obs;
}

// Least-squares sensing estimate from effective observations and the applied
// pilot columns. Returns the row-vector estimate of the sensing channel.
inline MatC sensing_ls(const SensingObservations& obs, const MatC& Xs_eff) {
  int m = static_cast<int>(Xs_eff.rows());
  int n = static_cast<int>(obs.value.size());
  MatC Y(1, n), X(m, n);
  for (int i = 0; i < n; ++i) {
    Y(0, i) = obs.value[i];
    X.col(i) = Xs_eff.col(obs.column[i]);
  }
  return ls_estimate(Y, X);
}

inline nlohmann::json bia_plan_to_json(const BiaPlan& p) {
  nlohmann::json j;
  j["family"] = to_string(p.family);
  j["K"] = p.K;
  j["m"] = p.m;
  j["n"] = p.n;
  j["a"] = p.a;
  j["periods"] = p.periods;
  j["t0"] = p.t0;
  j["N"] = p.N;
  j["msgs_per_period"] = p.msgs_per_period;
  j["obs_per_period"] = p.n_obs_per_period;
  j["point"] = {p.point.sdof.num, p.point.sdof.den, p.point.cdof.num, p.point.cdof.den};
  std::vector<std::vector<double>> pat(p.pattern.rows());
  for (int r = 0; r < p.pattern.rows(); ++r) {
    pat[r].resize(p.pattern.cols());
    for (int c = 0; c < p.pattern.cols(); ++c) pat[r][c] = p.pattern(r, c);
  }
  j["pattern"] = pat;
  j["streams"] = nlohmann::json::array();
  for (const auto& s : p.streams)
    j["streams"].push_back({{"round", s.round}, {"rx", s.rx}, {"width", s.width}});
  return j;
}

}  // namespace isacim
