#pragma once

// Monte Carlo SNR sweep: per trial, draw geometry and channels, transmit one
// block with the configured scheme, and at each SNR estimate the sensing
// channel three ways — the proposed interference-free observations built
// from every slot of the frame, a pilots-only least-squares fit over a fixed
// training window (treat-interference-as-noise), and detection-based
// cancellation over the same window. The window is one pilot-column cycle
// (at least two periods): the slots a conventional estimator would treat as
// its training segment, while the proposed path's use of the whole block is
// exactly its structural advantage. For the coherence-time schemes the
// window comes from the same received frame; the connectivity schemes manage
// interference by precoding the pilots themselves, so their benchmark
// transmits unmanaged raw pilot columns at the same power instead. Every
// random draw comes from a counter-based stream keyed by (seed, purpose,
// trial, substream), so results are bit-identical for any worker-thread
// count.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "isacim/baselines.hpp"
#include "isacim/bia.hpp"
#include "isacim/certify.hpp"
#include "isacim/config.hpp"
#include "isacim/tim.hpp"

namespace isacim {

struct SweepMethodStats {
  double cee_mean = 0.0;  // linear mean over trials
  double cee_db = 0.0;    // 10*log10(cee_mean)
  double ser = 0.0;
};

struct SweepRow {
  double snr_db = 0.0;
  SweepMethodStats proposed, tin, sic;
  int trials = 0;
  long long degenerate_resamples = 0;  // whole-sweep count, echoed per row
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by snr_db
  long long degenerate_resamples = 0;
  HullReport hull;    // sensing-only / scheme / communication-only
  MatC pilots;        // the pilot matrix used (m' x N)
  // Per-trial raw values, [snr][trial]; SER is computed once from the
  // transmit chain shared by all three sensing paths.
  std::vector<std::vector<double>> trial_cee_proposed, trial_cee_tin, trial_cee_sic;
  std::vector<std::vector<double>> trial_ser;
};

namespace detail {

inline TopologyGraph single_node_topology(int K) {
  TopologyGraph g;
  g.kind = TopologyKind::full;
  g.K = K;
  g.n_tx = 1;
  g.n_users = K;
  g.Rc.assign(K, {1});
  g.Rs = {1};
  return g;
}

inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Everything a caller needs to simulate or certify one scheme instance: the
// plan, the network it runs on, and the derived dimensions.
struct SchemeSetup {
  bool is_tim = false;
  BiaPlan bia;
  TimPlan tim;
  TopologyGraph topo;
  AntennaSpec ant;
  int slots_per_period = 0;
  int mprime = 0;
  int Ncols = 0;
  int msgs_rows = 0;
  int min_t0 = 0;  // the plan's minimum identifiable block
  TradeoffPoint point;
};

inline SchemeSetup make_scheme_setup(const SchemeParams& sp, std::uint64_t seed) {
  SchemeSetup su;
  su.is_tim = sp.family == SchemeFamily::tim_antidote ||
              sp.family == SchemeFamily::tim_regular;
  switch (sp.family) {
    case SchemeFamily::bia_ic:
      su.bia = plan_ic(sp.K);
      su.topo = build_topology_full(sp.K);
      su.ant = AntennaSpec::uniform(sp.K, sp.K);
      break;
    case SchemeFamily::bia_miso:
      su.bia = plan_miso(sp.m, sp.K);
      su.topo = detail::single_node_topology(sp.K);
      su.ant = AntennaSpec::uniform(1, sp.K, sp.m, 1);
      break;
    case SchemeFamily::bia_mimo:
      su.bia = plan_mimo(sp.m, sp.n);
      su.topo = detail::single_node_topology(static_cast<int>(sp.n.size()));
      su.ant.tx_ant = {sp.m};
      su.ant.rx_ant = sp.n;
      break;
    case SchemeFamily::tim_antidote:
      su.tim = plan_antidote(sp.K, sp.U, sp.D, sp.add_mode, seed);
      su.topo = su.tim.topo;
      su.ant = AntennaSpec::uniform(su.topo.n_tx, su.topo.K);
      break;
    case SchemeFamily::tim_regular:
      su.tim = plan_regular(sp.K, sp.d, sp.add_mode, seed);
      su.topo = su.tim.topo;
      su.ant = AntennaSpec::uniform(su.topo.n_tx, su.topo.K);
      break;
  }
  if (su.is_tim) {
    su.slots_per_period = su.tim.L;
    su.mprime = su.tim.mprime;
    su.Ncols = su.tim.N;
    su.msgs_rows = su.tim.msgs_per_period;
    su.min_t0 = su.tim.t0;
    su.point = su.tim.point;
  } else {
    su.slots_per_period = su.bia.a;
    su.mprime = su.bia.m;
    su.Ncols = su.bia.N;
    su.msgs_rows = su.bia.msgs_per_period;
    su.min_t0 = su.bia.t0;
    su.point = su.bia.point;
  }
  return su;
}

inline SweepResult run_sweep(const SimConfig& cfg) {
  cfg.validate();
  const SchemeParams& sp = cfg.scheme;

  // Build the plan up front: infeasible parameters fail before any trial.
  SchemeSetup su = make_scheme_setup(sp, cfg.seed);
  const bool is_tim = su.is_tim;
  const BiaPlan& bia = su.bia;
  const TimPlan& tim = su.tim;
  const TopologyGraph& topo = su.topo;
  const AntennaSpec& ant = su.ant;

  const int slots_per_period = su.slots_per_period;
  const int periods_act = cfg.n_symbols + 1;  // first period carries the reference symbols
  const int t0_act = slots_per_period * periods_act;
  const int mprime = su.mprime;
  const int Ncols = su.Ncols;
  const int msgs_rows = su.msgs_rows;
  const MatC X = generate_pilots(mprime, Ncols);
  const std::vector<double> snrs = cfg.snr_points();
  const int S = static_cast<int>(snrs.size());
  const double P = std::pow(10.0, cfg.tx_power_dbm / 10.0);  // milliwatts
  const double split = cfg.power_split_comm;

  // Training window for the conventional estimators: one full pilot-column
  // cycle, and no shorter than two periods so differential detection has at
  // least two symbol samples to work with.
  const int n_obs_pp = is_tim ? su.tim.n0 : su.bia.n_obs_per_period;
  const int w_periods = std::min(periods_act, std::max(2, Ncols / n_obs_pp));
  const int w_slots = w_periods * slots_per_period;

  SweepResult res;
  res.pilots = X;
  auto alloc = [&](std::vector<std::vector<double>>& v) {
    v.assign(S, std::vector<double>(cfg.n_trials, 0.0));
  };
  alloc(res.trial_cee_proposed);
  alloc(res.trial_cee_tin);
  alloc(res.trial_cee_sic);
  alloc(res.trial_ser);

  std::atomic<long long> degen{0};
  std::atomic<int> next{0};
  std::mutex err_mtx;
  std::exception_ptr first_err;

  auto do_trial = [&](int t) {
    // --- geometry and channels, resampling whole trials on degenerate draws
    ChannelTensor ch;
    LinkGeometry geo;
    std::vector<BiaPeriodPrecoders> pre;
    const bool needs_precoders = !is_tim && sp.family != SchemeFamily::bia_ic;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 64)
        throw numeric_error("trial " + std::to_string(t) +
                            ": channel draws keep failing precoder rank checks");
      PhiloxStream grng(cfg.seed, StreamPurpose::geometry, t, attempt);
      geo.rx_distances_m.clear();
      for (int k = 0; k < topo.n_users; ++k)
        geo.rx_distances_m.push_back(
            grng.uniform_range(cfg.rx_distance_min_m, cfg.rx_distance_max_m));
      geo.target_distance_m =
          grng.uniform_range(cfg.target_distance_min_m, cfg.target_distance_max_m);
      geo.pathloss_exponent = cfg.pathloss_exponent;
      PhiloxStream crng(cfg.seed, StreamPurpose::channel_comm, t, attempt);
      PhiloxStream srng(cfg.seed, StreamPurpose::channel_sensor, t, attempt);
      ch = apply_pathloss(
          sample_channel(topo, ant, t0_act,
                         is_tim ? Coherence::constant_block : Coherence::fast_per_slot,
                         crng, srng),
          geo);
      if (!needs_precoders) break;
      try {
        pre.clear();
        for (int p = 1; p <= periods_act; ++p) pre.push_back(bia_period_precoders(bia, ch, p));
        break;
      } catch (const numeric_error&) {
        ++degen;
      }
    }

    // True sensing channel row (after path loss), ascending visible order.
    MatC hs(1, mprime);
    const int srow = ch.sensor_row();
    if (is_tim) {
      for (int si = 0; si < mprime; ++si) hs(0, si) = ch.at(srow, tim.rs_order[si], 1)(0, 0);
    } else if (sp.family == SchemeFamily::bia_ic) {
      for (int i = 1; i <= bia.K; ++i) hs(0, i - 1) = ch.at(srow, i, 1)(0, 0);
    } else {
      hs = ch.at(srow, 1, 1);
    }

    // --- messages: one differential stream per message row
    PhiloxStream mrng(cfg.seed, StreamPurpose::messages, t, 0);
    std::vector<std::vector<int>> true_idx(msgs_rows, std::vector<int>(cfg.n_symbols));
    for (int r = 0; r < msgs_rows; ++r)
      for (int p = 0; p < cfg.n_symbols; ++p)
        true_idx[r][p] = static_cast<int>(mrng.uniform() * 4.0);
    MatC msgs(msgs_rows, periods_act);
    for (int r = 0; r < msgs_rows; ++r) {
      msgs(r, 0) = 1.0;
      std::vector<cxd> syms = dqpsk_modulate(true_idx[r], 0.0);
      for (int p = 1; p < periods_act; ++p) msgs(r, p) = syms[p - 1];
    }

    // --- encode and propagate (noiseless baseline, noise added per SNR)
    BiaBlock bblk;
    TimBlock tblk;
    RxBlock base;
    TimDecoder tdec;
    if (is_tim) {
      tblk = encode_tim_block(tim, msgs, X, P, split);
      base = apply_channel(ch, tblk.x);
      tdec = make_tim_decoder(tim, ch, tblk.c_amp);
    } else {
      bblk = encode_block(bia, pre, msgs, X, P, split);
      base = apply_channel(ch, bblk.x);
    }

    // Conventional-estimator training window on the sensing link. The
    // coherence-time schemes transmit their pilots as a plain slot schedule,
    // so the window is cut from the same received frame and the estimators
    // fit the true windowed waveform (zero-message encode isolates it). The
    // connectivity schemes precode the pilots into the interference null
    // space — that precoding is the management under test — so their
    // unmanaged counterpart transmits the raw pilot columns instead, at the
    // same per-slot sensing power and alongside the same communication
    // signal, with its own noise draw.
    MatC X_bench(mprime, w_slots);
    Eigen::RowVectorXcd y0b;  // noiseless benchmark sensor samples (TIM only)
    if (is_tim) {
      const double plain_amp = std::sqrt((1.0 - split) * P * Ncols);
      for (int n = 0; n < w_slots; ++n)
        for (int si = 0; si < mprime; ++si)
          X_bench(si, n) = plain_amp * X(si, n % Ncols);
      TimBlock zb = encode_tim_block(tim, MatC::Zero(msgs_rows, w_periods), X, P, split);
      y0b = Eigen::RowVectorXcd::Zero(w_slots);
      for (int n = 0; n < w_slots; ++n) {
        cxd acc = 0.0;
        for (int tx = 1; tx <= ch.n_tx; ++tx)
          acc += ch.at(srow, tx, 1)(0, 0) * (tblk.x[n](tx - 1) - zb.x[n](tx - 1));
        for (int si = 0; si < mprime; ++si) acc += hs(0, si) * X_bench(si, n);
        y0b(n) = acc;
      }
    } else {
      std::vector<BiaPeriodPrecoders> pre_w(
          pre.begin(), pre.begin() + std::min<std::size_t>(pre.size(), w_periods));
      BiaBlock zb = encode_block(bia, pre_w, MatC::Zero(msgs_rows, w_periods), X, P, split);
      for (int n = 0; n < w_slots; ++n) X_bench.col(n) = zb.x[n];
    }

    const double d_e = std::pow(geo.target_distance_m, -cfg.pathloss_exponent);

    // --- per-SNR processing
    for (int s = 0; s < S; ++s) {
      const double snr_lin = db_to_lin(snrs[s]);
      std::vector<double> sigma(ch.n_rx);
      for (int k = 0; k < topo.n_users; ++k)
        sigma[k] = std::sqrt(P * std::pow(geo.rx_distances_m[k], -cfg.pathloss_exponent) /
                             snr_lin);
      sigma[ch.n_rx - 1] = std::sqrt(P * d_e / snr_lin);

      RxBlock rx = base;
      PhiloxStream nrng(cfg.seed, StreamPurpose::noise, t, s);
      add_noise(rx, sigma, nrng);

      // proposed sensing path
      SensingObservations obs = is_tim
                                    ? tim_sensor_observations(tim, rx, periods_act, Ncols)
                                    : sensor_observations(bia, rx, periods_act, Ncols);
      const MatC& Xs_eff = is_tim ? tblk.Xs_eff : bblk.Xs_eff;
      MatC hhat = sensing_ls(obs, Xs_eff);
      res.trial_cee_proposed[s][t] = cee(hs, hhat);

      // communication decode and symbol errors
      BiaDecodeResult dec = is_tim ? tim_decode_receivers(tim, tdec, ch, rx, tblk)
                                   : decode_receivers(bia, pre, ch, rx, bblk);
      long long errs = 0;
      std::vector<cxd> chain(periods_act);
      for (int r = 0; r < msgs_rows; ++r) {
        for (int p = 0; p < periods_act; ++p) chain[p] = dec.msgs_hat(r, p);
        std::vector<int> det = dqpsk_differential_detect(chain);
        for (int p = 0; p < cfg.n_symbols; ++p)
          if (det[p] != true_idx[r][p]) ++errs;
      }
      res.trial_ser[s][t] =
          static_cast<double>(errs) / (static_cast<double>(msgs_rows) * cfg.n_symbols);

      // conventional estimators: least squares over the training window,
      // with the communication term left in place
      MatC yw(1, w_slots);
      if (is_tim) {
        PhiloxStream brng(cfg.seed, StreamPurpose::bench_noise, t, s);
        for (int n = 0; n < w_slots; ++n)
          yw(0, n) = y0b(n) + sigma[ch.n_rx - 1] * brng.cgauss();
      } else {
        for (int n = 0; n < w_slots; ++n) yw(0, n) = rx.y[srow - 1][n](0);
      }
      MatC ht = tin_sensor_estimate(yw, X_bench);
      res.trial_cee_tin[s][t] = cee(hs, ht);
      SicEstimate se = sic_sensor_estimate(yw, X_bench, 0.0, slots_per_period);
      res.trial_cee_sic[s][t] = cee(hs, se.h_hat);
    }
  };

  auto worker = [&]() {
    for (;;) {
      int t = next.fetch_add(1);
      if (t >= cfg.n_trials) return;
      try {
        do_trial(t);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mtx);
        if (!first_err) first_err = std::current_exception();
        return;
      }
    }
  };
  const int nthreads = std::min(cfg.threads, cfg.n_trials);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_err) std::rethrow_exception(first_err);

  res.degenerate_resamples = degen.load();
  if (static_cast<double>(res.degenerate_resamples) > 0.01 * cfg.n_trials)
    throw numeric_error("degenerate channel draws exceeded 1% of trials (cap)");

  // Fixed-order compensated aggregation: independent of worker scheduling.
  for (int s = 0; s < S; ++s) {
    SweepRow row;
    row.snr_db = snrs[s];
    row.trials = cfg.n_trials;
    row.degenerate_resamples = res.degenerate_resamples;
    KahanSum kp, kt, ks, kser;
    for (int t = 0; t < cfg.n_trials; ++t) {
      kp.add(res.trial_cee_proposed[s][t]);
      kt.add(res.trial_cee_tin[s][t]);
      ks.add(res.trial_cee_sic[s][t]);
      kser.add(res.trial_ser[s][t]);
    }
    const double inv = 1.0 / cfg.n_trials;
    row.proposed.cee_mean = kp.value() * inv;
    row.tin.cee_mean = kt.value() * inv;
    row.sic.cee_mean = ks.value() * inv;
    row.proposed.cee_db = lin_to_db(row.proposed.cee_mean);
    row.tin.cee_db = lin_to_db(row.tin.cee_mean);
    row.sic.cee_db = lin_to_db(row.sic.cee_mean);
    // One transmit chain feeds all three sensing paths, so their symbol error
    // rates are identical by construction.
    row.proposed.ser = row.tin.ser = row.sic.ser = kser.value() * inv;
    res.rows.push_back(row);
  }

  const TradeoffPoint point = is_tim ? tim.point : bia.point;
  res.hull = hull_report({sensing_only_point(), point, comm_only_point(sp)});
  return res;
}

// --- output files ---------------------------------------------------------------

struct EmitPaths {
  std::string csv, tradeoff, manifest, pilots;
};

inline std::string sweep_csv_text(const SweepResult& res) {
  std::string out = "snr_db,cee_proposed,cee_tin,cee_sic,ser_proposed,ser_tin,ser_sic\n";
  for (const auto& r : res.rows) {
    out += detail::fmt_g17(r.snr_db);
    out += ',';
    out += detail::fmt_g17(r.proposed.cee_mean);
    out += ',';
    out += detail::fmt_g17(r.tin.cee_mean);
    out += ',';
    out += detail::fmt_g17(r.sic.cee_mean);
    out += ',';
    out += detail::fmt_g17(r.proposed.ser);
    out += ',';
    out += detail::fmt_g17(r.tin.ser);
    out += ',';
    out += detail::fmt_g17(r.sic.ser);
    out += '\n';
  }
  return out;
}

inline nlohmann::json manifest_json(const SweepResult& res, const SimConfig& cfg) {
  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  j["seed"] = cfg.seed;
  j["git_describe"] = "";  // filled by packaging, opaque here
  j["snr_definition"] =
      "snr = P * d^(-pathloss_exponent) / sigma^2 per receiver; the sensing "
      "receiver uses the target distance";
  j["degenerate_resamples"] = res.degenerate_resamples;
  j["benchmark_estimators"] =
      "least squares over one pilot-column cycle (>= 2 periods); coherence "
      "schemes reuse the received frame, connectivity schemes benchmark "
      "against unmanaged raw pilot columns at the same power; the proposed "
      "path uses every slot of the block";
  j["operating_table"] = nlohmann::json::array();
  auto row = [&](const std::string& param, const std::string& table_value,
                 const std::string& used, const std::string& status) {
    j["operating_table"].push_back({{"parameter", param},
                                    {"table_value", table_value},
                                    {"used", used},
                                    {"status", status}});
  };
  row("snr_range_db", "[-5, 35] step 5",
      "[" + detail::fmt_g17(cfg.snr_db_min) + ", " + detail::fmt_g17(cfg.snr_db_max) +
          "] step " + detail::fmt_g17(cfg.snr_db_step),
      "honored");
  row("n_symbols", "1000", std::to_string(cfg.n_symbols), "honored");
  row("n_trials", "100", std::to_string(cfg.n_trials), "honored");
  row("tx_power_dbm", "30", detail::fmt_g17(cfg.tx_power_dbm), "honored");
  row("pathloss_exponent", "3.5", detail::fmt_g17(cfg.pathloss_exponent), "honored");
  row("rx_distance_m", "[50, 100]",
      "[" + detail::fmt_g17(cfg.rx_distance_min_m) + ", " +
          detail::fmt_g17(cfg.rx_distance_max_m) + "]",
      "honored");
  row("target_distance_m", "[10, 50]",
      "[" + detail::fmt_g17(cfg.target_distance_min_m) + ", " +
          detail::fmt_g17(cfg.target_distance_max_m) + "]",
      "honored");
  row("power_split", "0.5 / 0.5",
      detail::fmt_g17(cfg.power_split_comm) + " / " + detail::fmt_g17(cfg.power_split_sens),
      "honored");
  row("modulation", "DQPSK", "DQPSK", "honored");
  row("ldpc_code_rate", "0.5", "uncoded symbol-level error counting", "substituted");
  row("pulse_shaping", "root-raised cosine", "symbol-rate baseband", "substituted");
  return j;
}

inline EmitPaths emit_outputs(const SweepResult& res, const SimConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  EmitPaths paths;
  auto write_file = [](const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
  };
  paths.csv = (fs::path(cfg.out_dir) / "sweep.csv").string();
  write_file(paths.csv, sweep_csv_text(res));
  paths.tradeoff = (fs::path(cfg.out_dir) / "tradeoff.json").string();
  write_file(paths.tradeoff, hull_report_to_json(res.hull).dump(2) + "\n");
  paths.manifest = (fs::path(cfg.out_dir) / "manifest.json").string();
  write_file(paths.manifest, manifest_json(res, cfg).dump(2) + "\n");
  paths.pilots = (fs::path(cfg.out_dir) / "pilots.csv").string();
  dump_pilots_csv(res.pilots, paths.pilots);
  return paths;
}

}  // namespace isacim
