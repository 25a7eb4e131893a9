#pragma once

// Numerical decodability certification of a transmission plan on a concrete
// channel draw: per-receiver rank/margin analysis of the desired and
// interfering signal spans, a brute-force check that no message symbol leaks
// into the sensing observations, and a recount of the plan's claimed
// trade-off point.

#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isacim/bia.hpp"
#include "isacim/common.hpp"
#include "isacim/dof.hpp"
#include "isacim/tim.hpp"

namespace isacim {

struct ReceiverCert {
  int rx = 0;
  int desired_rank = 0;
  int expected_desired = 0;
  int interference_rank = 0;
  double margin = 0.0;  // smallest singular value of the stacked signal basis
  bool ok = false;
};

struct CertReport {
  std::string scheme;
  TradeoffPoint claimed;
  std::vector<ReceiverCert> receivers;
  std::vector<int> failed_receivers;
  double sensor_leakage = 0.0;  // max |sensing observation| from a unit message, zero pilots
  bool sensor_ok = false;
  bool counting_ok = false;
  bool pass = false;
};

namespace detail {

inline int rank_above(const MatC& M, double tol) {
  if (M.cols() == 0 || M.rows() == 0) return 0;
  Eigen::JacobiSVD<MatC> svd(M);
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++r;
  return r;
}

inline double min_sv(const MatC& M) {
  if (M.cols() == 0 || M.rows() == 0) return 0.0;
  Eigen::JacobiSVD<MatC> svd(M);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

inline void finalize_report(CertReport& rep, double tol) {
  for (const auto& rc : rep.receivers)
    if (!rc.ok) rep.failed_receivers.push_back(rc.rx);
  rep.sensor_ok = rep.sensor_leakage <= tol;
  rep.pass = rep.failed_receivers.empty() && rep.sensor_ok && rep.counting_ok;
}

}  // namespace detail

// --- coherence-time alignment plans -----------------------------------------

inline CertReport certify_plan(const BiaPlan& plan, const ChannelTensor& ch, double tol) {
  if (ch.t0 < plan.t0)
    throw config_error("certify: channel block shorter than the plan's minimum block");
  CertReport rep;
  rep.scheme = to_string(plan.family);
  rep.claimed = plan.point;

  // (a) per-receiver spans, worst case over the minimum block's periods.
  rep.receivers.resize(plan.K);
  for (int k = 1; k <= plan.K; ++k) {
    auto& rc = rep.receivers[k - 1];
    rc.rx = k;
    rc.margin = std::numeric_limits<double>::infinity();
    rc.desired_rank = std::numeric_limits<int>::max();
    rc.interference_rank = 0;
  }
  bool solvable_fault = false;
  if (plan.family == SchemeFamily::bia_ic) {
    for (auto& rc : rep.receivers) rc.expected_desired = 1;
    for (int p = 1; p <= plan.periods; ++p) {
      for (int k = 1; k <= plan.K; ++k) {
        MatC A(plan.a, plan.K);
        for (int t = 1; t <= plan.a; ++t)
          for (int i = 1; i <= plan.K; ++i)
            A(t - 1, i - 1) = ch.at(k, i, (p - 1) * plan.a + t)(0, 0);
        auto& rc = rep.receivers[k - 1];
        rc.desired_rank = std::min(rc.desired_rank, detail::rank_above(A.col(k - 1), tol));
        MatC I(plan.a, plan.K - 1);
        int c = 0;
        for (int i = 1; i <= plan.K; ++i)
          if (i != k) I.col(c++) = A.col(i - 1);
        rc.interference_rank = std::max(rc.interference_rank, detail::rank_above(I, tol));
        rc.margin = std::min(rc.margin, detail::min_sv(A));
      }
    }
  } else {
    for (const auto& st : plan.streams)
      rep.receivers[st.rx - 1].expected_desired += st.width;
    for (auto& rc : rep.receivers) rc.desired_rank = 0;
    for (int p = 1; p <= plan.periods; ++p) {
      BiaPeriodPrecoders pre;
      try {
        pre = bia_period_precoders(plan, ch, p);
      } catch (const numeric_error&) {
        solvable_fault = true;  // degenerate draw: certification fails, no throw
        break;
      }
      std::vector<int> desired(plan.K, 0);
      for (std::size_t s = 0; s < plan.streams.size(); ++s) {
        const auto& st = plan.streams[s];
        MatC Hp = ch.at(st.rx, 1, (p - 1) * plan.a + st.round).topRows(st.width);
        MatC des = Hp * pre.precoder[s];
        MatC intf(st.width, plan.m - st.width);
        int c0 = 0;
        for (std::size_t s2 = 0; s2 < plan.streams.size(); ++s2) {
          if (s2 == s) continue;
          MatC cols = Hp * pre.precoder[s2];
          intf.block(0, c0, st.width, cols.cols()) = cols;
          c0 += static_cast<int>(cols.cols());
        }
        auto& rc = rep.receivers[st.rx - 1];
        desired[st.rx - 1] += detail::rank_above(des, tol);
        rc.interference_rank = std::max(rc.interference_rank, detail::rank_above(intf, tol));
        MatC stacked(st.width, plan.m);
        stacked << des, intf;
        rc.margin = std::min(rc.margin, detail::min_sv(stacked));
      }
      for (int k = 1; k <= plan.K; ++k) {
        auto& rc = rep.receivers[k - 1];
        if (p == 1)
          rc.desired_rank = desired[k - 1];
        else
          rc.desired_rank = std::min(rc.desired_rank, desired[k - 1]);
      }
    }
  }
  for (auto& rc : rep.receivers) {
    if (!std::isfinite(rc.margin)) rc.margin = 0.0;  // no period was solvable
    rc.ok = !solvable_fault && rc.desired_rank == rc.expected_desired && rc.margin > tol;
  }

  // (b) sensor isolation: every unit message with zeroed pilots must vanish
  // from the effective sensing observations.
  {
    MatC Xzero = MatC::Zero(plan.m, plan.N);
    std::vector<BiaPeriodPrecoders> pre;
    bool have_pre = true;
    if (plan.family != SchemeFamily::bia_ic) {
      try {
        pre.push_back(bia_period_precoders(plan, ch, 1));
      } catch (const numeric_error&) {
        have_pre = false;
        rep.sensor_leakage = std::numeric_limits<double>::infinity();
      }
    }
    if (have_pre) {
      for (int s = 0; s < plan.msgs_per_period; ++s) {
        MatC msgs = MatC::Zero(plan.msgs_per_period, 1);
        msgs(s, 0) = 1.0;
        BiaBlock blk = encode_block(plan, pre, msgs, Xzero, 2.0, 0.5);
        RxBlock rx = apply_channel(ch, blk.x);
        SensingObservations obs = sensor_observations(plan, rx, 1, plan.N);
        for (const cxd& v : obs.value)
          rep.sensor_leakage = std::max(rep.sensor_leakage, std::abs(v));
      }
    }
  }

  // (c) counting identity against the claimed point.
  rep.counting_ok = Rational(plan.n_obs_per_period, plan.a) == plan.point.sdof &&
                    Rational(plan.msgs_per_period, plan.a) == plan.point.cdof;

  detail::finalize_report(rep, tol);
  return rep;
}

// --- connectivity-based plans -------------------------------------------------

inline CertReport certify_plan(const TimPlan& plan, const ChannelTensor& ch, double tol) {
  if (ch.t0 < plan.L)
    throw config_error("certify: channel block shorter than one period");
  CertReport rep;
  rep.scheme = to_string(plan.family);
  rep.claimed = plan.point;

  rep.receivers.resize(plan.topo.K);
  for (int k = 1; k <= plan.topo.K; ++k) {
    auto& rc = rep.receivers[k - 1];
    rc.rx = k;
    rc.expected_desired = static_cast<int>(plan.rx_desired[k - 1].size());

    // Channel-weighted desired columns, one per desired stream.
    MatC des(plan.L, rc.expected_desired);
    std::set<int> desired_v;
    for (int i = 0; i < rc.expected_desired; ++i) {
      const auto& d = plan.rx_desired[k - 1][i];
      des.col(i) = ch.at(k, d.tx, 1)(0, 0) * plan.V.col(d.v_idx - 1);
      desired_v.insert(d.v_idx);
    }
    // Interference: terms sharing a coding vector collapse into one column,
    // which is exactly the alignment the scheme relies on.
    std::map<int, VecC> merged;
    for (int tx : plan.topo.Rc[k - 1])
      for (const auto& term : plan.tx_terms[tx - 1]) {
        if (desired_v.count(term.v_idx)) continue;
        auto [it, fresh] = merged.try_emplace(term.v_idx, VecC::Zero(plan.L));
        it->second += ch.at(k, tx, 1)(0, 0) * plan.V.col(term.v_idx - 1);
      }
    MatC intf(plan.L, merged.size());
    {
      int c = 0;
      for (const auto& [v, col] : merged) intf.col(c++) = col;
    }
    MatC stacked(plan.L, des.cols() + intf.cols());
    stacked << des, intf;
    rc.desired_rank = detail::rank_above(des, tol);
    rc.interference_rank = detail::rank_above(intf, tol);
    rc.margin = detail::min_sv(stacked);
    rc.ok = rc.desired_rank == rc.expected_desired && rc.margin > tol;
  }

  // (b) sensor isolation through the annihilation step.
  {
    MatC Xzero = MatC::Zero(plan.mprime, plan.N);
    for (int s = 0; s < plan.msgs_per_period; ++s) {
      MatC msgs = MatC::Zero(plan.msgs_per_period, 1);
      msgs(s, 0) = 1.0;
      TimBlock blk = encode_tim_block(plan, msgs, Xzero, 2.0, 0.5);
      RxBlock rx = apply_channel(ch, blk.x);
      SensingObservations obs = tim_sensor_observations(plan, rx, 1, plan.N);
      for (const cxd& v : obs.value)
        rep.sensor_leakage = std::max(rep.sensor_leakage, std::abs(v));
    }
  }

  rep.counting_ok = Rational(plan.n0, plan.L) == plan.point.sdof &&
                    Rational(plan.msgs_per_period, plan.L) == plan.point.cdof;

  detail::finalize_report(rep, tol);
  return rep;
}

inline nlohmann::json cert_report_to_json(const CertReport& rep) {
  nlohmann::json j;
  j["scheme"] = rep.scheme;
  j["claimed_point"] = {rep.claimed.sdof.num, rep.claimed.sdof.den, rep.claimed.cdof.num,
                        rep.claimed.cdof.den};
  j["receivers"] = nlohmann::json::array();
  for (const auto& rc : rep.receivers)
    j["receivers"].push_back({{"rx", rc.rx},
                              {"desired_rank", rc.desired_rank},
                              {"expected_desired", rc.expected_desired},
                              {"interference_rank", rc.interference_rank},
                              {"margin", rc.margin},
                              {"ok", rc.ok}});
  j["failed_receivers"] = rep.failed_receivers;
  j["sensor_leakage"] = rep.sensor_leakage;
  j["sensor_ok"] = rep.sensor_ok;
  j["counting_ok"] = rep.counting_ok;
  j["pass"] = rep.pass;
  return j;
}

}  // namespace isacim
