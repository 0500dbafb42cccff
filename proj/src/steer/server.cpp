#include "msim/steer/server.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>

namespace msim::steer {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;
using Clock = std::chrono::steady_clock;

namespace {

struct Session : std::enable_shared_from_this<Session> {
  tcp::socket socket;
  asio::streambuf input;
  std::deque<std::shared_ptr<const std::string>> output;
  bool writing = false;
  bool closing = false;  ///< close once the output queue is flushed
  std::size_t max_backlog;
  std::function<void(const std::shared_ptr<Session>&, const std::string&)> on_line;
  std::function<void(const std::shared_ptr<Session>&)> on_close;

  Session(tcp::socket s, std::size_t backlog) : socket(std::move(s)), max_backlog(backlog) {}

  void start() { read(); }

  /// `droppable` lines are skipped for clients that are not keeping up.
  void send(std::shared_ptr<const std::string> line, bool droppable = false) {
    if (closing || !socket.is_open()) return;
    if (droppable && output.size() >= max_backlog) return;
    output.push_back(std::move(line));
    if (!writing) write();
  }

  void send(const Message& m) { send(std::make_shared<const std::string>(encode(m) + "\n")); }

  void close_after_flush() {
    closing = true;
    if (!writing) shutdown();
  }

  void read() {
    asio::async_read_until(socket, input, '\n', [self = shared_from_this()](boost::system::error_code ec, std::size_t) {
      if (ec) return self->shutdown();
      std::istream is(&self->input);
      std::string line;
      std::getline(is, line);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) self->on_line(self, line);
      if (self->socket.is_open()) self->read();
    });
  }

  void write() {
    writing = true;
    asio::async_write(socket, asio::buffer(*output.front()),
                      [self = shared_from_this()](boost::system::error_code ec, std::size_t) {
                        self->writing = false;
                        if (ec) return self->shutdown();
                        self->output.pop_front();
                        if (!self->output.empty()) self->write();
                        else if (self->closing) self->shutdown();
                      });
  }

  void shutdown() {
    if (!socket.is_open()) return;
    boost::system::error_code ignored;
    socket.shutdown(tcp::socket::shutdown_both, ignored);
    socket.close(ignored);
    on_close(shared_from_this());
  }
};

struct Inbound {
  std::weak_ptr<Session> origin;
  std::variant<Command, FullStateRequest> body;
};

}  // namespace

struct Server::Impl {
  ServerOptions options;
  Scene scene;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::set<std::shared_ptr<Session>> sessions;  // io thread only
  std::atomic<std::size_t> session_count{0};

  std::mutex inbound_mutex;
  std::condition_variable inbound_ready;
  std::deque<Inbound> inbound;

  std::atomic<bool> stopping{false};
  std::atomic<std::uint64_t> step_counter{0};
  std::thread io_thread, sim_thread;
  bool started = false;

  Impl(Scene s, ServerOptions o) : options(std::move(o)), scene(std::move(s)) {
    if (!(options.rate > 0)) throw std::invalid_argument("snapshot rate must be > 0");
    if (options.decimate == 0) throw std::invalid_argument("decimation must be >= 1");
    try {
      const tcp::endpoint endpoint(asio::ip::make_address(options.address), options.port);
      acceptor.open(endpoint.protocol());
      acceptor.set_option(tcp::acceptor::reuse_address(true));
      acceptor.bind(endpoint);
      acceptor.listen();
    } catch (const boost::system::system_error& e) {
      throw IoError("cannot listen on " + options.address + ":" + std::to_string(options.port) + ": " +
                    e.code().message());
    }
  }

  void accept() {
    acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto session = std::make_shared<Session>(std::move(socket), options.max_backlog);
      session->on_line = [this](const std::shared_ptr<Session>& s, const std::string& line) { receive(s, line); };
      session->on_close = [this](const std::shared_ptr<Session>& s) {
        sessions.erase(s);
        session_count = sessions.size();
      };
      sessions.insert(session);
      session_count = sessions.size();
      session->send(Hello{});
      session->start();
      accept();
    });
  }

  void receive(const std::shared_ptr<Session>& session, const std::string& line) {
    Message message;
    try {
      message = decode(line);
    } catch (const ProtocolError& e) {
      session->send(ErrorMessage{e.what()});
      return;
    }
    if (auto* hello = std::get_if<Hello>(&message)) {
      const std::string refusal = check_hello(*hello);
      if (!refusal.empty()) {
        session->send(ErrorMessage{refusal});
        session->close_after_flush();
      }
      return;
    }
    if (auto* c = std::get_if<CommandMessage>(&message)) return enqueue({session, c->command});
    if (std::holds_alternative<FullStateRequest>(message)) return enqueue({session, FullStateRequest{}});
    session->send(ErrorMessage{"clients may not send '" + std::string(type_name(message)) + "' messages"});
  }

  void enqueue(Inbound item) {
    {
      std::lock_guard lock(inbound_mutex);
      inbound.push_back(std::move(item));
    }
    inbound_ready.notify_all();
  }

  std::deque<Inbound> take(Clock::time_point until) {
    std::unique_lock lock(inbound_mutex);
    if (until > Clock::now())
      inbound_ready.wait_until(lock, until, [&] { return !inbound.empty() || stopping.load(); });
    return std::exchange(inbound, {});
  }

  void reply(const std::weak_ptr<Session>& origin, Message message) {
    auto line = std::make_shared<const std::string>(encode(message) + "\n");
    asio::post(io, [origin, line] {
      if (auto s = origin.lock()) s->send(line);
    });
  }

  void broadcast(const Message& message) {
    auto line = std::make_shared<const std::string>(encode(message) + "\n");
    const bool droppable = std::holds_alternative<Snapshot>(message);
    asio::post(io, [this, line, droppable] {
      for (const auto& s : sessions) s->send(line, droppable);
    });
  }

  void simulate() {
    Engine engine(scene, options.engine);
    bool paused = options.start_paused;
    const auto interval = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / options.rate));
    auto last = Clock::now();
    auto next = last + interval;
    std::uint64_t last_step = 0;

    while (!stopping) {
      const bool can_step =
          !paused && (options.max_steps == 0 || engine.state().step < options.max_steps);
      // while idle, sleep until the next snapshot or the next command
      for (auto& item : take(can_step ? Clock::time_point{} : next)) {
        if (auto* request = std::get_if<FullStateRequest>(&item.body)) {
          (void)request;
          const auto& s = engine.state();
          reply(item.origin, FullState{s.time(), s.step, s.positions, s.velocities});
          continue;
        }
        const Command& c = std::get<Command>(item.body);
        if (std::holds_alternative<cmd::Pause>(c)) paused = true;
        else if (std::holds_alternative<cmd::Resume>(c)) paused = false;
        else {
          try {
            engine.apply(c);
          } catch (const std::exception& e) {
            reply(item.origin, ErrorMessage{e.what()});
          }
        }
      }
      if (can_step && !paused) {
        try {
          engine.step();
        } catch (const DivergenceError& e) {
          broadcast(ErrorMessage{e.what()});
          paused = true;
        }
        step_counter = engine.state().step;
      }
      const auto now = Clock::now();
      if (now >= next) {
        broadcast(snapshot(engine, now - last, engine.state().step - last_step));
        last = now;
        last_step = engine.state().step;
        next += interval;
        if (next <= now) next = now + interval;
      }
    }
  }

  Snapshot snapshot(const Engine& engine, Clock::duration elapsed, std::uint64_t steps) const {
    const auto& s = engine.state();
    Snapshot snap;
    snap.t = s.time();
    snap.n = s.step;
    for (std::size_t i = 0; i < s.positions.size(); i += options.decimate)
      snap.positions.push_back({Index(i), s.positions[i]});
    snap.energies = energies(engine);
    const double seconds = std::chrono::duration<double>(elapsed).count();
    snap.throughput = seconds > 0 ? double(engine.scene().springs.size()) * double(steps) / seconds : 0;
    return snap;
  }
};

Server::Server(Scene scene, ServerOptions options) : impl_(std::make_unique<Impl>(std::move(scene), std::move(options))) {
  validate_scene(impl_->scene);
}

Server::~Server() { stop(); }

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::start() {
  if (impl_->started) return;
  impl_->started = true;
  impl_->accept();
  impl_->io_thread = std::thread([this] { impl_->io.run(); });
  impl_->sim_thread = std::thread([this] { impl_->simulate(); });
}

void Server::stop() {
  if (!impl_ || !impl_->started) return;
  impl_->started = false;
  impl_->stopping = true;
  impl_->inbound_ready.notify_all();
  if (impl_->sim_thread.joinable()) impl_->sim_thread.join();
  std::promise<void> closed;
  asio::post(impl_->io, [this, &closed] {
    boost::system::error_code ignored;
    impl_->acceptor.close(ignored);
    auto sessions = impl_->sessions;
    for (const auto& s : sessions) s->shutdown();
    closed.set_value();
  });
  closed.get_future().wait();
  impl_->io.stop();
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
}

std::uint64_t Server::steps() const { return impl_->step_counter; }

std::size_t Server::clients() const { return impl_->session_count; }

struct Client::Impl {
  asio::io_context io;
  tcp::socket socket{io};
  asio::streambuf input;
};

Client::Client(const std::string& host, unsigned short port) : impl_(std::make_unique<Impl>()) {
  try {
    tcp::resolver resolver(impl_->io);
    asio::connect(impl_->socket, resolver.resolve(host, std::to_string(port)));
  } catch (const boost::system::system_error& e) {
    throw IoError("cannot connect to " + host + ":" + std::to_string(port) + ": " + e.code().message());
  }
}

Client::~Client() { close(); }

void Client::send(const Message& message) { send_raw(encode(message)); }

void Client::send_raw(const std::string& line) {
  try {
    asio::write(impl_->socket, asio::buffer(line + "\n"));
  } catch (const boost::system::system_error& e) {
    throw IoError("send failed: " + e.code().message());
  }
}

Message Client::receive() {
  boost::system::error_code ec;
  asio::read_until(impl_->socket, impl_->input, '\n', ec);
  if (ec) throw IoError("connection closed: " + ec.message());
  std::istream is(&impl_->input);
  std::string line;
  std::getline(is, line);
  return decode(line);
}

void Client::close() {
  if (!impl_) return;
  boost::system::error_code ignored;
  impl_->socket.shutdown(tcp::socket::shutdown_both, ignored);
  impl_->socket.close(ignored);
}

}  // namespace msim::steer
