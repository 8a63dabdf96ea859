#include "jssa/server.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <filesystem>
#include <set>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "jssa/config.hpp"
#include "jssa/geometry.hpp"

namespace jssa {

namespace {

std::array<double, 3> to_array(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

wire::LiveParams live(const SafetyIndexParams& p) { return {p.lambda1, p.lambda2, p.d_min}; }

}  // namespace

SimSession::SimSession(Scenario scenario, std::size_t state_every)
    : loaded_(std::move(scenario)), state_every_(state_every == 0 ? 1 : state_every) {
  sim_ = std::make_unique<Simulation>(loaded_);
}

wire::Message SimSession::stamp(wire::Payload payload) { return wire::Message{seq_++, std::move(payload)}; }

wire::Message SimSession::error_message(std::string code, std::string detail) {
  return stamp(wire::ErrorMsg{std::move(code), std::move(detail)});
}

wire::Message SimSession::error(std::string code, std::string detail) {
  std::lock_guard lock(mutex_);
  return error_message(std::move(code), std::move(detail));
}

std::optional<wire::Message> SimSession::submit(int client, std::string_view text) {
  wire::Message m;
  try {
    m = wire::parse(text);
  } catch (const ConfigError& e) {
    std::lock_guard lock(mutex_);
    return error_message("malformed", e.what());
  }
  const bool inbound = std::holds_alternative<wire::Control>(m.payload) ||
                       std::holds_alternative<wire::ParamUpdate>(m.payload) ||
                       std::holds_alternative<wire::ScenarioCmd>(m.payload);
  std::lock_guard lock(mutex_);
  if (!inbound) {
    return error_message("unsupported", std::string(wire::kind_name(m.payload)) + " is sent by the server only");
  }
  queue_.push_back(Pending{client, std::move(m.payload)});
  return std::nullopt;
}

void SimSession::submit(int client, wire::Payload payload) {
  std::lock_guard lock(mutex_);
  queue_.push_back(Pending{client, std::move(payload)});
}

void SimSession::apply(const Pending& p, std::vector<Outbound>& out, bool& force_state) {
  auto reply_error = [&](std::string code, std::string detail) {
    out.push_back({p.client, error_message(std::move(code), std::move(detail))});
  };

  if (const auto* c = std::get_if<wire::Control>(&p.payload)) {
    const auto& agents = sim_->world().environment.dynamic_agents;
    if (c->agent_id < 0 || c->agent_id >= static_cast<int>(agents.size()) ||
        !std::holds_alternative<ExternalDriver>(agents[static_cast<std::size_t>(c->agent_id)].driver)) {
      reply_error("bad_agent", "agent " + std::to_string(c->agent_id) + " is not externally driven");
      return;
    }
    const Vec3 target(c->target_xyz[0], c->target_xyz[1], c->target_xyz[2]);
    if (!target.allFinite()) {
      reply_error("bad_control", "target must be finite");
      return;
    }
    inputs_[c->agent_id] = ExternalInput{target, sim_->world().t};
    return;
  }

  if (const auto* u = std::get_if<wire::ParamUpdate>(&p.payload)) {
    SafetyIndexParams next = sim_->scenario().params;
    if (u->lambda1) next.lambda1 = *u->lambda1;
    if (u->lambda2) next.lambda2 = *u->lambda2;
    if (u->d_min) next.d_min = *u->d_min;
    try {
      sim_->set_safety_params(next);
      loaded_.params = sim_->scenario().params;
    } catch (const ConfigError& e) {
      reply_error("bad_params", e.what());
    }
    force_state = true;
    return;
  }

  if (const auto* s = std::get_if<wire::ScenarioCmd>(&p.payload)) {
    switch (s->op) {
      case wire::ScenarioOp::kStart:
        if (sim_->finished()) {
          sim_ = std::make_unique<Simulation>(loaded_);
          inputs_.clear();
          reported_ = false;
        }
        running_ = true;
        break;
      case wire::ScenarioOp::kPause:
        running_ = false;
        break;
      case wire::ScenarioOp::kReset:
        sim_ = std::make_unique<Simulation>(loaded_);
        inputs_.clear();
        running_ = false;
        reported_ = false;
        break;
      case wire::ScenarioOp::kLoad:
        try {
          Scenario next = s->scenario->is_string()
                              ? load_scenario(std::filesystem::path(s->scenario->get<std::string>()))
                              : scenario_from_json(*s->scenario);
          auto sim = std::make_unique<Simulation>(next);
          loaded_ = std::move(next);
          sim_ = std::move(sim);
          inputs_.clear();
          running_ = false;
          reported_ = false;
        } catch (const Error& e) {
          reply_error("bad_scenario", e.what());
        }
        break;
    }
    force_state = true;
    return;
  }

  reply_error("unsupported", std::string(wire::kind_name(p.payload)) + " is sent by the server only");
}

std::vector<SimSession::Outbound> SimSession::tick() {
  std::lock_guard lock(mutex_);
  std::vector<Outbound> out;
  bool force_state = false;
  std::vector<Pending> pending;
  pending.swap(queue_);
  for (const auto& p : pending) apply(p, out, force_state);

  bool stepped = false;
  if (running_ && !sim_->finished()) {
    sim_->step(inputs_);
    inputs_.clear();
    stepped = true;
  }
  const bool done = sim_->finished();
  if (done) running_ = false;
  if (force_state || (stepped && (sim_->world().step % state_every_ == 0 || done))) {
    out.push_back({kBroadcast, stamp(state_locked())});
  }
  if (done && !reported_) {
    reported_ = true;
    const Scenario& sc = sim_->scenario();
    out.push_back({kBroadcast, stamp(wire::Metrics{compute_metrics(sim_->log(), sc.tau, sc.params.d_min, sc.bounds)})});
  }
  return out;
}

wire::State SimSession::state_locked() const {
  const WorldState& w = sim_->world();
  const Scenario& sc = sim_->scenario();
  wire::State s;
  s.t = w.t;
  s.theta.assign(w.robot.theta.data(), w.robot.theta.data() + w.robot.theta.size());
  const auto robot = robot_capsules(sc.chain, w.robot.theta);
  for (std::size_t i = 0; i < robot.size(); ++i) {
    s.capsules.push_back({to_array(robot[i].p0), to_array(robot[i].p1), robot[i].radius, "robot", static_cast<int>(i) + 1});
  }
  const auto agents = w.environment.agent_capsules();
  for (const auto& a : agents) {
    s.capsules.push_back({to_array(a.capsule.p0), to_array(a.capsule.p1), a.capsule.radius,
                          "agent:" + std::to_string(a.agent), a.capsule_id + 1});
  }
  if (!sim_->log().empty()) {
    const StepRecord& r = sim_->log().back();
    s.d = r.d;
    s.phi = r.phi;
    s.active = r.active;
    s.robot_link = r.robot_link;
    s.agent_link = r.agent_link;
  } else if (!agents.empty()) {
    const CriticalPair pair = critical_pair(sc.chain, w.robot, agents);
    s.d = pair.distance;
    s.robot_link = pair.robot_capsule + 1;
    s.agent_link = pair.agent_capsule + 1;
    try {
      const DistanceDerivatives dd = distance_derivatives(pair);
      s.phi = phi(sc.params, dd.d, dd.d_dot, dd.d_ddot);
    } catch (const DegenerateDistance&) {
      s.phi = sc.params.d_min * sc.params.d_min;
    }
  }
  s.params = live(sc.params);
  s.running = running_;
  return s;
}

wire::Message SimSession::state_message() {
  std::lock_guard lock(mutex_);
  return stamp(state_locked());
}

bool SimSession::running() const {
  std::lock_guard lock(mutex_);
  return running_;
}

bool SimSession::finished() const {
  std::lock_guard lock(mutex_);
  return sim_->finished();
}

std::size_t SimSession::step() const {
  std::lock_guard lock(mutex_);
  return sim_->world().step;
}

double SimSession::time() const {
  std::lock_guard lock(mutex_);
  return sim_->world().t;
}

SafetyIndexParams SimSession::params() const {
  std::lock_guard lock(mutex_);
  return sim_->scenario().params;
}

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  using Handler = std::function<void(int, std::string, bool)>;
  using Closed = std::function<void(int)>;

  Connection(tcp::socket socket, int id, Handler on_text, Closed on_close)
      : ws_(std::move(socket)), id_(id), on_text_(std::move(on_text)), on_close_(std::move(on_close)) {}

  int id() const { return id_; }

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->close();
      self->open_ = true;
      self->read();
      self->flush();
    });
  }

  void send(std::string text) {
    queue_.push_back(std::move(text));
    if (queue_.size() == 1 && open_) flush();
  }

  void shutdown() {
    if (!open_) return;
    open_ = false;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      self->on_text_(self->id_, beast::buffers_to_string(self->buffer_.data()), self->ws_.got_text());
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void flush() {
    if (queue_.empty() || writing_) return;
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) return self->close();
      self->queue_.pop_front();
      self->flush();
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    open_ = false;
    on_close_(id_);
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  int id_;
  Handler on_text_;
  Closed on_close_;
  bool open_ = false;
  bool writing_ = false;
  bool closed_ = false;
};

}  // namespace

struct WsServer::Impl {
  SimSession& session;
  ServerOptions options;
  net::io_context io;
  tcp::acceptor acceptor{io};
  net::steady_timer timer{io};
  std::chrono::steady_clock::time_point deadline;
  std::map<int, std::shared_ptr<Connection>> clients;
  std::atomic<std::size_t> client_total{0};
  int next_id = 0;
  std::thread thread;
  bool stopped = false;

  Impl(SimSession& s, ServerOptions o) : session(s), options(std::move(o)) {}

  void deliver(const std::vector<SimSession::Outbound>& out) {
    for (const auto& o : out) {
      const std::string text = wire::serialize(o.message);
      if (o.client == SimSession::kBroadcast) {
        for (auto& [_, c] : clients) c->send(text);
      } else if (auto it = clients.find(o.client); it != clients.end()) {
        it->second->send(text);
      }
    }
  }

  void on_frame(int id, const std::string& data, bool text) {
    const auto reply = text ? session.submit(id, data) : session.error("malformed", "binary frames are not supported");
    if (reply) deliver({{id, *reply}});
  }

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      const int id = next_id++;
      auto conn = std::make_shared<Connection>(
          std::move(socket), id, [this](int cid, std::string d, bool text) { on_frame(cid, d, text); },
          [this](int cid) {
            clients.erase(cid);
            client_total = clients.size();
          });
      clients[id] = conn;
      client_total = clients.size();
      conn->start();
      conn->send(wire::serialize(session.state_message()));
      accept();
    });
  }

  void schedule() {
    if (options.rate_hz <= 0.0) {
      net::post(io, [this] { tick(); });
      return;
    }
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / options.rate_hz));
    deadline += period;
    const auto now = std::chrono::steady_clock::now();
    if (deadline < now - 10 * period) deadline = now;
    timer.expires_at(deadline);
    timer.async_wait([this](beast::error_code ec) {
      if (!ec) tick();
    });
  }

  void tick() {
    if (stopped) return;
    deliver(session.tick());
    schedule();
  }

  void shutdown() {
    if (stopped) return;
    stopped = true;
    beast::error_code ec;
    acceptor.close(ec);
    timer.cancel();
    for (auto& [_, c] : std::map<int, std::shared_ptr<Connection>>(clients)) c->shutdown();
    io.stop();
  }
};

WsServer::WsServer(SimSession& session, std::uint16_t port, ServerOptions options)
    : impl_(std::make_unique<Impl>(session, std::move(options))) {
  beast::error_code ec;
  const auto address = net::ip::make_address(impl_->options.address, ec);
  if (ec) throw ServerError("invalid address '" + impl_->options.address + "'");
  const tcp::endpoint endpoint(address, port);
  auto& acc = impl_->acceptor;
  acc.open(endpoint.protocol(), ec);
  if (!ec) acc.bind(endpoint, ec);
  if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw ServerError("cannot listen on port " + std::to_string(port) + ": " + ec.message());
}

WsServer::~WsServer() { stop(); }

std::uint16_t WsServer::port() const { return impl_->acceptor.local_endpoint().port(); }

std::size_t WsServer::client_count() const { return impl_->client_total; }

void WsServer::run() {
  impl_->accept();
  impl_->deadline = std::chrono::steady_clock::now();
  impl_->schedule();
  impl_->io.run();
}

void WsServer::start() {
  impl_->thread = std::thread([this] { run(); });
}

void WsServer::stop() {
  if (!impl_) return;
  net::post(impl_->io, [impl = impl_.get()] { impl->shutdown(); });
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace jssa
