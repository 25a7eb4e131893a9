#pragma once

// Block-fading channel tensors with per-row coherence structure. The
// communication rows may fade independently every slot while the sensing row
// stays constant across the whole block — the temporal asymmetry the
// alignment schemes exploit — or every row may be constant (the regime where
// connectivity, not time variation, provides the structure).

#include <vector>

#include "isacim/common.hpp"
#include "isacim/rng.hpp"
#include "isacim/topology.hpp"

namespace isacim {

enum class Coherence { fast_per_slot, constant_block };

struct AntennaSpec {
  std::vector<int> tx_ant;  // antennas per transmit node (size n_tx)
  std::vector<int> rx_ant;  // antennas per receiver (size K)
  int sensor_ant = 1;

  static AntennaSpec uniform(int n_tx, int K, int m = 1, int n = 1) {
    AntennaSpec s;
    s.tx_ant.assign(n_tx, m);
    s.rx_ant.assign(K, n);
    return s;
  }
};

struct LinkGeometry {
  std::vector<double> rx_distances_m;  // per receiver
  double target_distance_m = 1.0;
  double pathloss_exponent = 3.5;
};

struct ChannelTensor {
  int n_rx = 0;   // receivers + 1; sensor is the last row
  int n_tx = 0;
  int t0 = 0;
  std::vector<int> rx_ant;               // per row (sensor row included)
  std::vector<int> tx_ant;               // per transmit node
  std::vector<Coherence> coherence;      // per row
  // H[row][tx][t]: (rx_ant[row] x tx_ant[tx]) gain matrix at slot t (0-based
  // internally; public accessors take 1-based indices to match the cyclic
  // index convention used everywhere else).
  std::vector<std::vector<std::vector<MatC>>> H;

  const MatC& at(int row, int tx, int t) const { return H[row - 1][tx - 1][t - 1]; }
  MatC& at(int row, int tx, int t) { return H[row - 1][tx - 1][t - 1]; }
  int sensor_row() const { return n_rx; }
};

// Draw one (r x c) matrix of i.i.d. unit-variance circularly-symmetric
// complex Gaussians. Row-major draw order keeps streams reproducible.
inline MatC sample_gain_matrix(PhiloxStream& rng, int r, int c) {
  MatC M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = rng.cgauss();
  return M;
}

// Sample a full block. Comm rows follow `comm_coherence`; the sensing row is
// always constant over the block. Links absent from the topology are exactly
// zero. Separate streams for comm and sensor rows let callers grow t0 without
// disturbing the sensing draw.
inline ChannelTensor sample_channel(const TopologyGraph& topo, const AntennaSpec& ant,
                                    int t0, Coherence comm_coherence,
                                    PhiloxStream& comm_rng, PhiloxStream& sensor_rng) {
  if (t0 < 1) throw config_error("sample_channel: t0 must be >= 1");
  ChannelTensor ch;
  ch.n_rx = topo.n_users + 1;
  ch.n_tx = topo.n_tx;
  ch.t0 = t0;
  ch.tx_ant = ant.tx_ant;
  ch.rx_ant = ant.rx_ant;
  ch.rx_ant.push_back(ant.sensor_ant);
  ch.coherence.assign(topo.n_users, comm_coherence);
  ch.coherence.push_back(Coherence::constant_block);
  ch.H.resize(ch.n_rx);
  for (int row = 1; row <= ch.n_rx; ++row) {
    bool is_sensor = (row == ch.n_rx);
    PhiloxStream& rng = is_sensor ? sensor_rng : comm_rng;
    Coherence coh = ch.coherence[row - 1];
    int nr = ch.rx_ant[row - 1];
    ch.H[row - 1].resize(ch.n_tx);
    for (int tx = 1; tx <= ch.n_tx; ++tx) {
      int mc = ch.tx_ant[tx - 1];
      bool present = is_sensor ? topo.sensor_connected(tx) : topo.connected(row, tx);
      auto& slots = ch.H[row - 1][tx - 1];
      slots.resize(t0);
      if (!present) {
        for (int t = 0; t < t0; ++t) slots[t] = MatC::Zero(nr, mc);
      } else if (coh == Coherence::constant_block) {
        MatC M = sample_gain_matrix(rng, nr, mc);
        for (int t = 0; t < t0; ++t) slots[t] = M;
      } else {
        for (int t = 0; t < t0; ++t) slots[t] = sample_gain_matrix(rng, nr, mc);
      }
    }
  }
  return ch;
}

// Scale each receiver row by its distance-law amplitude d^(-e/2) (received
// power follows d^(-e)); the sensing row uses the target distance.
inline ChannelTensor apply_pathloss(ChannelTensor ch, const LinkGeometry& geo) {
  if (static_cast<int>(geo.rx_distances_m.size()) != ch.n_rx - 1)
    throw config_error("apply_pathloss: need one distance per receiver");
  for (int row = 1; row <= ch.n_rx; ++row) {
    double dist = (row == ch.n_rx) ? geo.target_distance_m : geo.rx_distances_m[row - 1];
    if (!(dist > 0.0)) throw config_error("apply_pathloss: distances must be positive");
    if (!(geo.pathloss_exponent > 0.0))
      throw config_error("apply_pathloss: exponent must be positive");
    double amp = std::pow(dist, -geo.pathloss_exponent / 2.0);
    for (auto& link : ch.H[row - 1])
      for (auto& M : link) M *= amp;
  }
  return ch;
}

}  // namespace isacim
