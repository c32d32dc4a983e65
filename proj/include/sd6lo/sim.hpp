// Copyright 2026 The sd6lo Authors
// SPDX-License-Identifier: Apache-2.0

// Simulation kernel: UDGM channel, CSMA MAC, external link to the controller
// and UDP server, and per-replica metrics.

#ifndef SD6LO_SIM_HPP
#define SD6LO_SIM_HPP

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sd6lo/controller.hpp"
#include "sd6lo/event_queue.hpp"
#include "sd6lo/node.hpp"
#include "sd6lo/params.hpp"
#include "sd6lo/rng.hpp"
#include "sd6lo/scenario.hpp"

namespace sd6lo {

// ---------------------------------------------------------------------------
// Channel

struct Position {
  double x = 0.0;
  double y = 0.0;
};

enum class RxOutcome : std::uint8_t { kDelivered, kLost, kCollided };

struct Reception {
  std::size_t receiver;
  RxOutcome outcome;
};

/// Unit disk graph medium over node indices. Transmissions are registered
/// when they start and resolved when they end.
class Medium {
 public:
  Medium(std::vector<Position> positions, UdgmParams params);

  /// `interferes` is false for MAC acknowledgements, which occupy the
  /// channel for carrier sense but do not corrupt other receptions.
  std::uint64_t begin(std::size_t tx, SimTime start, SimTime end, bool interferes = true);
  /// Outcome at every node within tx range of the transmitter.
  std::vector<Reception> finish(std::uint64_t id, Rng& rng);
  bool busy(std::size_t node, SimTime now) const;

  double distance(std::size_t a, std::size_t b) const;
  std::int32_t rssi_dbm(std::size_t a, std::size_t b) const;
  const std::vector<std::size_t>& in_range(std::size_t node) const { return tx_nbrs_[node]; }
  std::size_t size() const { return pos_.size(); }
  const UdgmParams& params() const { return p_; }

 private:
  struct Tx {
    std::uint64_t id;
    std::size_t node;
    SimTime start;
    SimTime end;
    bool interferes;
  };
  void prune(SimTime now);

  std::vector<Position> pos_;
  UdgmParams p_;
  std::vector<std::vector<std::size_t>> tx_nbrs_;
  std::vector<std::vector<bool>> interferes_at_;  // [u][r]: u within interference range of r
  std::deque<Tx> txs_;
  std::uint64_t next_id_ = 1;
  SimTime max_duration_ = 0;
};

// ---------------------------------------------------------------------------
// Metrics

struct CategoryCounters {
  std::array<std::uint64_t, kMessageCategoryCount> frames{};
  std::array<std::uint64_t, kMessageCategoryCount> bytes{};

  std::uint64_t control_bytes() const;
  std::uint64_t control_frames() const;
};

struct RttSample {
  SimTime send_time = 0;
  SimTime rtt = 0;
  ShortAddr src;
  ShortAddr dst;
  std::vector<ShortAddr> fwd_path;
  std::vector<ShortAddr> rev_path;
  bool steady = false;
};

enum class Window : std::uint8_t { kWarmup, kSteady };

struct Metrics {
  std::uint64_t seed = 0;
  SimTime warmup = 0;
  SimTime duration = 0;
  std::array<CategoryCounters, 2> by_window;  // indexed by Window
  std::array<std::uint64_t, 2> miss_requests{};
  std::array<std::array<std::uint64_t, 4>, 2> datagrams_created{};  // [window][DatagramKind]
  std::uint64_t frames_transmitted = 0;
  std::uint64_t on_air_bytes = 0;
  std::uint64_t mac_acks = 0;
  std::uint64_t rx_attempts = 0;
  std::uint64_t rx_delivered = 0;
  std::uint64_t rx_lost = 0;
  std::uint64_t rx_collided = 0;
  std::uint64_t events = 0;
  std::vector<RttSample> rtt;
  std::map<std::string, std::uint64_t> diagnostics;

  Window window_of(SimTime t) const { return t >= warmup ? Window::kSteady : Window::kWarmup; }
  const CategoryCounters& steady() const { return by_window[1]; }
  std::uint64_t dao_datagrams() const {
    return datagrams_created[0][static_cast<int>(DatagramKind::kRplDao)] +
           datagrams_created[1][static_cast<int>(DatagramKind::kRplDao)];
  }
};

// ---------------------------------------------------------------------------
// Simulation

class Simulation : private NodeEnv {
 public:
  Simulation(const Scenario& scenario, StackMode mode, std::uint64_t seed);
  ~Simulation() override;

  /// Runs every event up to the scenario duration and returns the metrics.
  const Metrics& run();
  void run_until(SimTime t);

  EventQueue& queue() { return events_; }
  Node& node(ShortAddr a);
  const std::vector<std::unique_ptr<Node>>& nodes() const { return nodes_; }
  Controller* controller() { return controller_.get(); }
  const Medium& medium() const { return medium_; }
  const Metrics& metrics() const { return metrics_; }
  StackMode mode() const { return mode_; }

  /// Follows preferred parents from every joined node; true when each
  /// chain reaches the root in fewer than N steps.
  bool parent_chains_acyclic() const;

 private:
  struct MacJob {
    Frame frame;
    std::function<void(int)> done;
  };
  struct MacState {
    std::deque<MacJob> queue;
    bool active = false;
    int attempt = 0;
    int cca_tries = 0;
    std::uint8_t seq = 0;
    std::map<std::size_t, std::uint8_t> last_seq_from;
  };

  // NodeEnv
  EventQueue& events() override { return events_; }
  Rng& rng() override { return rng_; }
  std::uint64_t next_datagram_id() override { return next_datagram_id_++; }
  void mac_send(ShortAddr node, Frame f, std::function<void(int)> done) override;
  void external_send(DatagramPtr d) override;
  void datagram_created(ShortAddr node, const Datagram& d) override;
  void table_miss_requested(ShortAddr node) override;
  void rtt_sample(ShortAddr node, ShortAddr peer, SimTime sent_at, SimTime rtt, std::uint64_t request_id,
                  std::uint64_t reply_id) override;
  void diagnostic(ShortAddr node, const std::string& cause) override;

  // MAC
  void mac_start(std::size_t i);
  void mac_backoff(std::size_t i);
  void mac_cca(std::size_t i);
  void mac_transmit(std::size_t i);
  void mac_end_data(std::size_t i, std::uint64_t tx_id, SimTime start);
  void mac_attempt_failed(std::size_t i);
  void mac_finish(std::size_t i, int attempts);

  void controller_tick();
  void controller_send(ShortAddr dst, const SbiMessage& m, MessageCategory c);

  const Scenario& scenario_;
  StackMode mode_;
  StackParams params_;
  EventQueue events_;
  Rng rng_;
  Medium medium_;
  std::vector<std::unique_ptr<Node>> nodes_;
  std::map<ShortAddr, std::size_t> index_;
  std::vector<MacState> macs_;
  std::size_t br_index_ = 0;
  std::unique_ptr<Controller> controller_;
  std::unique_ptr<SbiEndpoint> controller_ep_;
  std::uint64_t next_datagram_id_ = 1;
  Metrics metrics_;
  std::map<std::uint64_t, std::vector<ShortAddr>> data_paths_;
  bool ran_ = false;
};

Metrics run_replica(const Scenario& scenario, StackMode mode, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Fragment pipeline over an ideal chain

struct ChainResult {
  SimTime completion = 0;
  std::size_t fragments = 0;
  std::size_t link_transmissions = 0;
};

/// Sends one datagram of `fragments` fragments across `hops` links with a
/// uniform per-frame airtime, no contention and the given processing costs.
/// Mesh-under forwards each fragment through a flow table as it arrives;
/// route-over reassembles at every hop first.
ChainResult simulate_chain(StackMode mode, std::size_t fragments, std::size_t hops, SimTime airtime,
                           const CostModel& costs);

/// Smallest compressed datagram size that splits into exactly `fragments`.
std::size_t datagram_size_for(std::size_t fragments, bool with_mesh, const LinkLimits& limits = {});

}  // namespace sd6lo

#endif  // SD6LO_SIM_HPP
