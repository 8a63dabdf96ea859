#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jssa/errors.hpp"
#include "jssa/sim.hpp"
#include "jssa/wire.hpp"

namespace jssa {

class ServerError : public Error {
 public:
  using Error::Error;
};

/// Simulation plus the client-facing state machine. Transport independent; all public members
/// are thread safe. Client messages are queued and applied at the next step boundary.
class SimSession {
 public:
  /// Client id used for messages addressed to every client.
  static constexpr int kBroadcast = -1;

  struct Outbound {
    int client = kBroadcast;
    wire::Message message;
  };

  explicit SimSession(Scenario scenario, std::size_t state_every = 5);

  /// Parses one text frame. Malformed frames are answered at once with an error message.
  std::optional<wire::Message> submit(int client, std::string_view text);
  void submit(int client, wire::Payload payload);

  /// Applies queued mutations, advances one step when running and returns what to send.
  std::vector<Outbound> tick();

  wire::Message state_message();
  wire::Message error(std::string code, std::string detail);
  bool running() const;
  bool finished() const;
  std::size_t step() const;
  double time() const;
  SafetyIndexParams params() const;

 private:
  struct Pending {
    int client = kBroadcast;
    wire::Payload payload;
  };

  wire::Message stamp(wire::Payload payload);
  wire::State state_locked() const;
  void apply(const Pending& p, std::vector<Outbound>& out, bool& force_state);
  wire::Message error_message(std::string code, std::string detail);

  mutable std::mutex mutex_;
  Scenario loaded_;
  std::unique_ptr<Simulation> sim_;
  std::vector<Pending> queue_;
  std::map<int, ExternalInput> inputs_;
  std::size_t state_every_;
  std::uint64_t seq_ = 0;
  bool running_ = false;
  bool reported_ = false;
};

struct ServerOptions {
  /// Control rate in Hz; 0 steps as fast as possible.
  double rate_hz = 125.0;
  std::string address = "127.0.0.1";
};

/// WebSocket endpoint for a SimSession. Each text frame carries one wire message; outgoing
/// messages without a recipient go to every connected client.
class WsServer {
 public:
  /// Binds immediately; port 0 picks a free port. Throws ServerError if the port is taken.
  WsServer(SimSession& session, std::uint16_t port, ServerOptions options = {});
  ~WsServer();
  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  std::uint16_t port() const;
  std::size_t client_count() const;

  /// Blocks until stop().
  void run();
  /// Runs on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace jssa
