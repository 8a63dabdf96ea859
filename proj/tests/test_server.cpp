#include <doctest.h>

#include <chrono>
#include <string>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "jssa/config.hpp"
#include "jssa/scenarios.hpp"
#include "jssa/server.hpp"

using namespace jssa;
namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;

namespace {

const std::filesystem::path kData = JSSA_DATA_DIR;

Scenario interactive() { return load_scenario(kData / "scenarios" / "interactive.json"); }

template <class T>
std::vector<T> collect(const std::vector<SimSession::Outbound>& out) {
  std::vector<T> found;
  for (const auto& o : out) {
    if (const auto* p = std::get_if<T>(&o.message.payload)) found.push_back(*p);
  }
  return found;
}

wire::Payload op(wire::ScenarioOp o) { return wire::ScenarioCmd{o, std::nullopt}; }

class Client {
 public:
  explicit Client(std::uint16_t port) : ws_(io_) {
    net::ip::tcp::resolver resolver(io_);
    net::connect(beast::get_lowest_layer(ws_), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }

  void send(const std::string& text) {
    ws_.text(true);
    ws_.write(net::buffer(text));
  }
  void send(const wire::Payload& p) { send(wire::serialize({0, p})); }

  wire::Message receive() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return wire::parse(beast::buffers_to_string(buf.data()));
  }

  /// Reads until a message of type T satisfying `pred` arrives.
  template <class T, class Pred>
  T wait_for(Pred pred, int limit = 5000) {
    for (int i = 0; i < limit; ++i) {
      const wire::Message m = receive();
      if (const auto* p = std::get_if<T>(&m.payload)) {
        if (pred(*p)) return *p;
      }
    }
    FAIL("message not received");
    return T{};
  }

  void close() { ws_.close(websocket::close_code::normal); }

 private:
  net::io_context io_;
  websocket::stream<net::ip::tcp::socket> ws_;
};

double agent_x(const wire::State& s) {
  for (const auto& c : s.capsules) {
    if (c.owner == "agent:0") return 0.5 * (c.p0[0] + c.p1[0]);
  }
  return 0.0;
}

}  // namespace

TEST_SUITE("server") {
  TEST_CASE("session starts paused and steps after start") {
    SimSession session(interactive(), 5);
    CHECK_FALSE(session.running());
    CHECK(session.tick().empty());
    CHECK(session.step() == 0);

    session.submit(1, op(wire::ScenarioOp::kStart));
    auto out = session.tick();
    CHECK(session.running());
    CHECK(session.step() == 1);
    REQUIRE(collect<wire::State>(out).size() == 1);
    CHECK(collect<wire::State>(out)[0].running);

    for (int i = 0; i < 3; ++i) CHECK(collect<wire::State>(session.tick()).empty());
    CHECK(collect<wire::State>(session.tick()).size() == 1);
    CHECK(session.step() == 5);

    session.submit(1, op(wire::ScenarioOp::kPause));
    session.tick();
    CHECK_FALSE(session.running());
    CHECK(session.step() == 5);
    session.tick();
    CHECK(session.step() == 5);

    session.submit(1, op(wire::ScenarioOp::kReset));
    out = session.tick();
    CHECK(session.step() == 0);
    CHECK(collect<wire::State>(out).size() == 1);
  }

  TEST_CASE("sequence numbers increase") {
    SimSession session(interactive(), 1);
    session.submit(0, op(wire::ScenarioOp::kStart));
    std::uint64_t last = 0;
    bool first = true;
    for (int i = 0; i < 10; ++i) {
      for (const auto& o : session.tick()) {
        if (!first) CHECK(o.message.seq > last);
        last = o.message.seq;
        first = false;
      }
    }
  }

  TEST_CASE("control moves the external agent from the next step") {
    SimSession session(interactive(), 1);
    const double x0 = agent_x(std::get<wire::State>(session.state_message().payload));
    session.submit(0, op(wire::ScenarioOp::kStart));
    session.tick();
    for (int i = 0; i < 60; ++i) {
      session.submit(0, wire::Control{{1.0, 0.0, 0.0}, 0});
      session.tick();
    }
    const double x1 = agent_x(std::get<wire::State>(session.state_message().payload));
    CHECK(x1 < x0 - 0.2);

    session.submit(7, wire::Control{{1.0, 0.0, 0.0}, 3});
    const auto out = session.tick();
    const auto errors = collect<wire::ErrorMsg>(out);
    REQUIRE(errors.size() == 1);
    CHECK(errors[0].code == "bad_agent");
    CHECK(out[0].client == 7);
  }

  TEST_CASE("parameter updates are echoed or rejected") {
    SimSession session(interactive(), 5);
    session.submit(0, wire::ParamUpdate{6.0, 7.0, std::nullopt});
    auto states = collect<wire::State>(session.tick());
    REQUIRE(states.size() == 1);
    CHECK(states[0].params == wire::LiveParams{6.0, 7.0, 0.05});
    CHECK(session.params().lambda1 == 6.0);

    session.submit(0, wire::ParamUpdate{1.0, 1.0, std::nullopt});
    const auto out = session.tick();
    REQUIRE(collect<wire::ErrorMsg>(out).size() == 1);
    CHECK(collect<wire::ErrorMsg>(out)[0].code == "bad_params");
    REQUIRE(collect<wire::State>(out).size() == 1);
    CHECK(collect<wire::State>(out)[0].params.lambda1 == 6.0);
  }

  TEST_CASE("malformed and server-only messages get errors") {
    SimSession session(interactive(), 5);
    auto e = session.submit(0, "{not json");
    REQUIRE(e);
    CHECK(std::get<wire::ErrorMsg>(e->payload).code == "malformed");
    e = session.submit(0, wire::serialize({0, wire::Metrics{}}));
    REQUIRE(e);
    CHECK(std::get<wire::ErrorMsg>(e->payload).code == "unsupported");
    CHECK_FALSE(session.submit(0, wire::serialize({0, wire::ScenarioCmd{wire::ScenarioOp::kStart, {}}})));
  }

  TEST_CASE("load swaps the scenario and reports at the end") {
    SimSession session(interactive(), 5);
    session.submit(0, wire::ScenarioCmd{wire::ScenarioOp::kLoad, wire::Json{{"family", "nope"}}});
    CHECK(collect<wire::ErrorMsg>(session.tick())[0].code == "bad_scenario");

    session.submit(0, wire::ScenarioCmd{wire::ScenarioOp::kLoad,
                                        wire::Json{{"family", "head_on"}, {"duration_s", 0.08}}});
    session.tick();
    session.submit(0, op(wire::ScenarioOp::kStart));
    std::vector<wire::Metrics> reports;
    for (int i = 0; i < 20; ++i) {
      for (const auto& m : collect<wire::Metrics>(session.tick())) reports.push_back(m);
    }
    CHECK(session.finished());
    CHECK_FALSE(session.running());
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].metrics.steps == 10);

    session.submit(0, op(wire::ScenarioOp::kStart));
    session.tick();
    CHECK(session.step() == 1);
  }

  TEST_CASE("websocket loopback") {
    SimSession session(interactive(), 5);
    WsServer server(session, 0, ServerOptions{0.0, "127.0.0.1"});
    REQUIRE(server.port() != 0);
    server.start();

    Client a(server.port());
    Client b(server.port());
    CHECK(std::holds_alternative<wire::State>(a.receive().payload));
    CHECK(std::holds_alternative<wire::State>(b.receive().payload));

    a.send("definitely not json");
    const auto err = a.wait_for<wire::ErrorMsg>([](const wire::ErrorMsg&) { return true; });
    CHECK(err.code == "malformed");

    a.send(wire::ParamUpdate{6.0, 6.0, std::nullopt});
    const auto echoed = b.wait_for<wire::State>([](const wire::State& s) { return s.params.lambda1 == 6.0; });
    CHECK(echoed.params.lambda2 == 6.0);

    const double x0 = agent_x(echoed);
    a.send(op(wire::ScenarioOp::kStart));
    b.wait_for<wire::State>([](const wire::State& s) { return s.running; });
    for (int i = 0; i < 50; ++i) a.send(wire::Control{{1.0, 0.0, 0.0}, 0});
    const auto moved = b.wait_for<wire::State>([&](const wire::State& s) { return agent_x(s) < x0 - 0.1; }, 100000);
    CHECK(agent_x(moved) < x0 - 0.1);

    CHECK(server.client_count() == 2);
    a.close();
    b.close();
    server.stop();
  }

  TEST_CASE("busy port") {
    SimSession session(interactive(), 5);
    WsServer first(session, 0, ServerOptions{125.0, "127.0.0.1"});
    CHECK_THROWS_AS(WsServer(session, first.port(), ServerOptions{125.0, "127.0.0.1"}), ServerError);
  }
}
