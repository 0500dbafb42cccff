#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "msim/engine.hpp"
#include "msim/steer/protocol.hpp"

namespace msim::steer {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 0;  ///< 0 binds an ephemeral port
  double rate = 30;         ///< snapshots per wall-clock second
  std::size_t decimate = 1; ///< snapshot carries every Dth mass by id
  EngineOptions engine{};
  bool start_paused = false;
  std::uint64_t max_steps = 0;    ///< stop stepping after this many; 0 runs unbounded
  std::size_t max_backlog = 1024; ///< per-client queued lines before snapshots are dropped
};

/// Steps one engine on its own thread and serves newline-delimited protocol
/// messages to any number of clients. Commands are queued by the I/O thread
/// and applied by the stepper between steps.
class Server {
 public:
  /// Binds immediately; throws IoError when the address is unavailable.
  Server(Scene scene, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;
  void start();
  void stop();
  std::uint64_t steps() const;
  std::size_t clients() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Blocking line client, used by tests and tooling.
class Client {
 public:
  Client(const std::string& host, unsigned short port);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  void send(const Message& message);
  void send_raw(const std::string& line);
  /// Next message; throws IoError when the connection closes.
  Message receive();
  /// Skips messages until one of type T arrives.
  template <typename T>
  T receive_as() {
    for (;;) {
      Message m = receive();
      if (auto* p = std::get_if<T>(&m)) return std::move(*p);
    }
  }
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace msim::steer
