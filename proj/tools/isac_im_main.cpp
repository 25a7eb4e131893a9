// Command-line front end: Monte Carlo channel-estimation sweeps, closed-form
// trade-off queries, and per-channel-realization scheme certificates.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isacim/certify.hpp"
#include "isacim/config.hpp"
#include "isacim/sweep.hpp"

namespace {

// Scheme structure flags shared by all subcommands. Each flag is applied only
// when the user actually passed it, so values from a config file survive
// unless explicitly overridden.
struct SchemeFlags {
  std::string scheme;
  int K = 0, U = 0, D = 0, d = 0, m = 0;
  std::vector<int> n;
  bool add_mode = false;
};

void add_scheme_flags(CLI::App* cmd, SchemeFlags& f, bool require_scheme) {
  auto* s = cmd->add_option(
      "--scheme", f.scheme,
      "one of: bia_ic, bia_miso, bia_mimo, tim_antidote, tim_regular");
  if (require_scheme) s->required();
  cmd->add_option("--K", f.K, "number of communication users");
  cmd->add_option("--U", f.U, "preceding disconnected transmitters (antidote networks)");
  cmd->add_option("--D", f.D, "succeeding disconnected transmitters (antidote networks)");
  cmd->add_option("--d", f.d, "per-user connectivity degree (regular networks)");
  cmd->add_option("--m", f.m, "transmit antennas (broadcast schemes)");
  cmd->add_option("--n", f.n, "receive antennas per user, comma separated (mimo)")
      ->delimiter(',');
  cmd->add_flag("--add-mode", f.add_mode,
                "sensor joins alongside all K users instead of replacing one");
}

void apply_scheme_flags(const CLI::App* cmd, const SchemeFlags& f,
                        isacim::SchemeParams& sp) {
  if (cmd->count("--scheme")) sp.family = isacim::scheme_family_from_string(f.scheme);
  if (cmd->count("--K")) sp.K = f.K;
  if (cmd->count("--U")) sp.U = f.U;
  if (cmd->count("--D")) sp.D = f.D;
  if (cmd->count("--d")) sp.d = f.d;
  if (cmd->count("--m")) sp.m = f.m;
  if (cmd->count("--n")) sp.n = f.n;
  if (cmd->count("--add-mode")) sp.add_mode = f.add_mode;
}

nlohmann::json point_json(const isacim::TradeoffPoint& p) {
  nlohmann::json j;
  j["sdof"] = {p.sdof.num, p.sdof.den};
  j["cdof"] = {p.cdof.num, p.cdof.den};
  j["label"] = p.label;
  return j;
}

int run_dof(const CLI::App* cmd, const SchemeFlags& flags, bool as_json) {
  isacim::SchemeParams sp;
  apply_scheme_flags(cmd, flags, sp);
  // The closed-form pair only means something for a constructible scheme;
  // infeasible parameters exit with code 3 here just like the other commands.
  (void)isacim::make_scheme_setup(sp, /*seed=*/1);
  const isacim::TradeoffPoint pt = isacim::scheme_point(sp);
  const isacim::TradeoffPoint lo = isacim::sensing_only_point();
  const isacim::TradeoffPoint hi = isacim::comm_only_point(sp);
  const isacim::HullReport hull = isacim::hull_report({lo, pt, hi});
  if (as_json) {
    nlohmann::json j;
    j["scheme"] = isacim::to_string(sp.family);
    j["point"] = point_json(pt);
    j["sensing_only"] = point_json(lo);
    j["comm_only"] = point_json(hi);
    j["hull"] = isacim::hull_report_to_json(hull);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "scheme:        " << isacim::to_string(sp.family) << "\n"
              << "point:         sdof=" << pt.sdof.str() << "  cdof=" << pt.cdof.str() << "\n"
              << "sensing-only:  sdof=" << lo.sdof.str() << "  cdof=" << lo.cdof.str() << "\n"
              << "comm-only:     sdof=" << hi.sdof.str() << "  cdof=" << hi.cdof.str() << "\n";
    std::cout << "hull vertices:";
    for (const auto& v : hull.vertices)
      std::cout << "  (" << v.sdof.str() << ", " << v.cdof.str() << ")";
    std::cout << "\n";
    if (!hull.gaps.empty()) {
      std::cout << "chord gaps:   ";
      for (const auto& g : hull.gaps) std::cout << "  " << g.str();
      std::cout << "\n";
    }
  }
  return 0;
}

int run_certify(const CLI::App* cmd, const SchemeFlags& flags, std::uint64_t seed,
                double tol) {
  isacim::SchemeParams sp;
  apply_scheme_flags(cmd, flags, sp);
  isacim::SchemeSetup su = isacim::make_scheme_setup(sp, seed);
  isacim::PhiloxStream comm_rng(seed, isacim::StreamPurpose::channel_comm, 0, 0);
  isacim::PhiloxStream sens_rng(seed, isacim::StreamPurpose::channel_sensor, 0, 0);
  const isacim::Coherence coh =
      su.is_tim ? isacim::Coherence::constant_block : isacim::Coherence::fast_per_slot;
  isacim::ChannelTensor ch =
      isacim::sample_channel(su.topo, su.ant, su.min_t0, coh, comm_rng, sens_rng);
  const isacim::CertReport rep = su.is_tim ? isacim::certify_plan(su.tim, ch, tol)
                                           : isacim::certify_plan(su.bia, ch, tol);
  std::cout << isacim::cert_report_to_json(rep).dump(2) << "\n";
  return rep.pass ? 0 : 4;
}

int run_sweep_cmd(const CLI::App* cmd, const SchemeFlags& flags,
                  const std::string& config_path, double snr_min, double snr_max,
                  double snr_step, int trials, int symbols, std::uint64_t seed,
                  const std::string& out_dir, int threads) {
  isacim::SimConfig cfg;
  if (!config_path.empty()) cfg = isacim::load_config(config_path);
  apply_scheme_flags(cmd, flags, cfg.scheme);
  if (cmd->count("--snr-min")) cfg.snr_db_min = snr_min;
  if (cmd->count("--snr-max")) cfg.snr_db_max = snr_max;
  if (cmd->count("--snr-step")) cfg.snr_db_step = snr_step;
  if (cmd->count("--trials")) cfg.n_trials = trials;
  if (cmd->count("--symbols")) cfg.n_symbols = symbols;
  if (cmd->count("--seed")) cfg.seed = seed;
  if (cmd->count("--out-dir")) cfg.out_dir = out_dir;
  if (cmd->count("--threads")) cfg.threads = threads;
  cfg.validate();

  const isacim::SweepResult res = isacim::run_sweep(cfg);
  const isacim::EmitPaths paths = isacim::emit_outputs(res, cfg);
  std::cout << "sweep: " << isacim::to_string(cfg.scheme.family) << ", "
            << res.rows.size() << " SNR points x " << cfg.n_trials << " trials ("
            << res.degenerate_resamples << " degenerate channel resamples)\n"
            << "wrote " << paths.csv << "\n"
            << "wrote " << paths.tradeoff << "\n"
            << "wrote " << paths.manifest << "\n"
            << "wrote " << paths.pilots << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interference management for bistatic sensing: sweeps, trade-off points, certificates"};
  app.require_subcommand(1);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run a Monte Carlo channel-estimation sweep");
  SchemeFlags sweep_flags;
  std::string config_path, out_dir;
  double snr_min = 0, snr_max = 0, snr_step = 0;
  int trials = 0, symbols = 0, threads = 0;
  std::uint64_t sweep_seed = 0;
  sweep->add_option("--config", config_path, "key=value configuration file")
      ->check(CLI::ExistingFile);
  add_scheme_flags(sweep, sweep_flags, /*require_scheme=*/false);
  sweep->add_option("--snr-min", snr_min, "lowest SNR in dB");
  sweep->add_option("--snr-max", snr_max, "highest SNR in dB");
  sweep->add_option("--snr-step", snr_step, "SNR grid step in dB");
  sweep->add_option("--trials", trials, "Monte Carlo trials per SNR point");
  sweep->add_option("--symbols", symbols, "data symbols per user per trial");
  sweep->add_option("--seed", sweep_seed, "master seed for all random streams");
  sweep->add_option("--out-dir", out_dir, "directory for sweep.csv, tradeoff.json, manifest.json, pilots.csv");
  sweep->add_option("--threads", threads, "worker threads (results are identical for any count)");

  // dof
  auto* dof = app.add_subcommand("dof", "print the closed-form trade-off point and hull");
  SchemeFlags dof_flags;
  bool dof_json = false;
  add_scheme_flags(dof, dof_flags, /*require_scheme=*/true);
  dof->add_flag("--json", dof_json, "machine-readable output");

  // certify
  auto* cert = app.add_subcommand("certify", "check a scheme against a random channel realization");
  SchemeFlags cert_flags;
  std::uint64_t cert_seed = 1;
  double cert_tol = 1e-8;
  add_scheme_flags(cert, cert_flags, /*require_scheme=*/true);
  cert->add_option("--seed", cert_seed, "seed for the channel realization");
  cert->add_option("--tol", cert_tol, "rank / leakage tolerance");

  try {
    app.parse(argc, argv);
    if (sweep->parsed())
      return run_sweep_cmd(sweep, sweep_flags, config_path, snr_min, snr_max, snr_step,
                           trials, symbols, sweep_seed, out_dir, threads);
    if (dof->parsed()) return run_dof(dof, dof_flags, dof_json);
    if (cert->parsed()) return run_certify(cert, cert_flags, cert_seed, cert_tol);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const isacim::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const isacim::infeasible_error& e) {
    std::cerr << "infeasible scheme: " << e.what() << "\n";
    return 3;
  } catch (const isacim::numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
