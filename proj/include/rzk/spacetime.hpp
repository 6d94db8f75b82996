#pragma once

// Discrete-event model of four agents on a line exchanging messages at
// speed at most c = 1, and the verifiers' timing check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <json.hpp>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "rzk/error.hpp"

namespace rzk::spacetime {

enum class Site { P1, P2, V1, V2 };

inline std::string to_string(Site s) {
  switch (s) {
    case Site::P1: return "P1";
    case Site::P2: return "P2";
    case Site::V1: return "V1";
    case Site::V2: return "V2";
  }
  return "?";
}

/// Arrival times may undercut the light cone by at most this much (rounding).
inline constexpr double kTimeTolerance = 1e-12;

/// Positions on the line. Verifier positions are trusted; prover positions
/// are only labels used to compute travel times.
class Layout {
 public:
  Layout(double p1, double p2, double v1, double v2) : pos_{p1, p2, v1, v2} {
    for (double p : pos_) require(std::isfinite(p), ErrorCode::InvalidArgument, "positions must be finite");
  }

  /// V1 = P1 = 0 and V2 = P2 = D.
  static Layout honest(double separation = 1.0) {
    require(separation > 0, ErrorCode::InvalidArgument, "verifier separation must be positive");
    return Layout(0.0, separation, 0.0, separation);
  }

  double position(Site s) const { return pos_[static_cast<std::size_t>(s)]; }
  double distance(Site a, Site b) const { return std::abs(position(a) - position(b)); }
  double verifier_separation() const { return distance(Site::V1, Site::V2); }

 private:
  std::array<double, 4> pos_;
};

enum class EventKind { Send, Receive };

struct SpacetimeEvent {
  EventKind kind = EventKind::Send;
  std::string msg;
  Site from = Site::P1;
  Site to = Site::P1;
  double time = 0.0;
  std::uint64_t run = 0;

  /// Where the event happens: the sender's site for a send, the receiver's for a receive.
  Site site() const { return kind == EventKind::Send ? from : to; }
};

inline bool timeline_before(const SpacetimeEvent& a, const SpacetimeEvent& b) {
  // Sends sort before receives of the same message at equal times.
  return std::tie(a.time, a.msg, a.kind) < std::tie(b.time, b.msg, b.kind);
}

class Timeline {
 public:
  Timeline() = default;
  explicit Timeline(std::vector<SpacetimeEvent> ordered) : events_(std::move(ordered)) {}

  const std::vector<SpacetimeEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }

  const SpacetimeEvent& find(EventKind kind, const std::string& msg) const {
    for (const auto& e : events_)
      if (e.kind == kind && e.msg == msg) return e;
    throw Error(ErrorCode::InvalidArgument, "no event for message " + msg);
  }

  nlohmann::json to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : events_)
      out.push_back({{"kind", e.kind == EventKind::Send ? "send" : "receive"},
                     {"msg", e.msg},
                     {"from", to_string(e.from)},
                     {"to", to_string(e.to)},
                     {"time", e.time}});
    return out;
  }

  std::string to_json_lines() const {
    std::ostringstream out;
    for (const auto& line : to_json()) out << line.dump() << '\n';
    return out.str();
  }

 private:
  std::vector<SpacetimeEvent> events_;
};

/// Orders events by (time, message id) and checks every receive against
/// its send: receive.time >= send.time + distance.
inline Timeline schedule(std::vector<SpacetimeEvent> events, const Layout& layout) {
  std::map<std::string, const SpacetimeEvent*> sends;
  for (const auto& e : events) {
    require(std::isfinite(e.time), ErrorCode::InvalidArgument, "event time must be finite");
    if (e.kind == EventKind::Send) {
      require(sends.emplace(e.msg, &e).second, ErrorCode::InvalidArgument, "message sent twice: " + e.msg);
    }
  }
  for (const auto& e : events) {
    if (e.kind != EventKind::Receive) continue;
    const auto it = sends.find(e.msg);
    require(it != sends.end(), ErrorCode::CausalityViolationInConstruction, "receive without a send: " + e.msg);
    const SpacetimeEvent& s = *it->second;
    require(s.from == e.from && s.to == e.to && s.run == e.run, ErrorCode::InvalidArgument, "receive does not match its send: " + e.msg);
    const double earliest = s.time + layout.distance(e.from, e.to);
    require(e.time >= earliest - kTimeTolerance, ErrorCode::CausalityViolationInConstruction,
            "message " + e.msg + " arrives before its light cone");
  }
  std::stable_sort(events.begin(), events.end(), timeline_before);
  return Timeline(std::move(events));
}

/// Builds the events of one run. Every message travels at exactly c unless
/// given extra delay; receives are never earlier than the light cone.
class Simulation {
 public:
  Simulation(Layout layout, std::uint64_t run) : layout_(layout), run_(run) {}

  const Layout& layout() const { return layout_; }
  std::uint64_t run() const { return run_; }

  /// Returns the arrival time.
  double transmit(const std::string& msg, Site from, Site to, double send_time, double extra_delay = 0.0) {
    require(extra_delay >= 0, ErrorCode::InvalidArgument, "messages cannot travel faster than light");
    const double arrival = send_time + layout_.distance(from, to) + extra_delay;
    events_.push_back({EventKind::Send, msg, from, to, send_time, run_});
    events_.push_back({EventKind::Receive, msg, from, to, arrival, run_});
    return arrival;
  }

  Timeline timeline() const { return schedule(events_, layout_); }

 private:
  Layout layout_;
  std::uint64_t run_;
  std::vector<SpacetimeEvent> events_;
};

struct CausalityVerdict {
  bool pass = false;
  double slack = 0.0;     ///< deadline - answer arrival
  double deadline = 0.0;  ///< B send time + |V1 - V2|
  double max_sustain = 0.0;  ///< the matching bound on how long a commitment may be held, D / c
  std::string explanation;
};

/// V2 must receive the answer strictly before information about B, sent by
/// V1, could reach V2.
inline CausalityVerdict nss_check(const SpacetimeEvent& b_send, const SpacetimeEvent& answer_recv, const Layout& layout) {
  require(b_send.run == answer_recv.run, ErrorCode::MismatchedRun, "events come from different protocol runs");
  require(b_send.kind == EventKind::Send && b_send.from == Site::V1, ErrorCode::InvalidArgument, "B must be sent by V1");
  require(answer_recv.kind == EventKind::Receive && answer_recv.to == Site::V2, ErrorCode::InvalidArgument,
          "the answer must be received by V2");
  CausalityVerdict v;
  const double separation = layout.verifier_separation();
  v.deadline = b_send.time + separation;
  v.slack = v.deadline - answer_recv.time;
  v.pass = v.slack > 0;
  v.max_sustain = separation;
  std::ostringstream why;
  why << "answer at t=" << answer_recv.time << (v.pass ? " precedes" : " does not precede") << " deadline t=" << v.deadline;
  v.explanation = why.str();
  return v;
}

}  // namespace rzk::spacetime
