#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "qps/server.hpp"

using namespace qps;
using json = nlohmann::json;

namespace {

std::string read_corpus(const std::string& name) {
  std::ifstream in(std::string(QPS_CORPUS_DIR) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kTwoCycle =
    "field rationals\nalgebra F dim=1 basis=e\nvertex 1 algebra=F\nvertex 2 algebra=F\nvertex 3 algebra=F\n"
    "arrow a 1 -> 2\narrow b 2 -> 1\narrow c 2 -> 3\npotential = 0\n";

/// A session served on a free loopback port for the lifetime of the fixture.
class Served {
 public:
  explicit Served(const std::string& doc) : session(parse_document(doc)), server(session) {
    port = server.bind(0);
    thread = std::thread([this] { server.run(); });
    server.wait_until_ready();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  ~Served() {
    server.stop();
    thread.join();
  }

  json get(const std::string& path, int expect = 200) {
    auto r = client->Get(path);
    EXPECT_TRUE(r);
    EXPECT_EQ(r->status, expect) << r->body;
    return json::parse(r->body);
  }
  json post(const std::string& path, const json& body, int expect = 200) {
    auto r = client->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(r);
    EXPECT_EQ(r->status, expect) << r->body;
    return json::parse(r->body);
  }

  SessionState session;
  SessionServer server;
  int port = 0;
  std::thread thread;
  std::unique_ptr<httplib::Client> client;
};

json b_of(const ExchangeMatrix& m) { return m.b; }

}  // namespace

TEST(Server, StateReportsTheLoadedDocument) {
  Served s(read_corpus("triangle.qp"));
  const json st = s.get("/state");
  EXPECT_EQ(st["matrix"]["b"], json({{0, 1, -1}, {-1, 0, 1}, {1, -1, 0}}));
  EXPECT_EQ(st["potential"]["text"], "a*b*c");
  EXPECT_TRUE(st["history"].empty());
  EXPECT_EQ(st["shape"]["arrows"].size(), 3u);
}

TEST(Server, MutateMatchesTheMatrixRule) {
  Served s(read_corpus("triangle.qp"));
  const json r = s.post("/mutate", {{"vertex", 2}});
  const ExchangeMatrix expected = matrix_mutation(exchange_matrix(*parse_document(read_corpus("triangle.qp")).shape), 1);
  EXPECT_EQ(r["output"]["matrix"]["b"], b_of(expected));
  EXPECT_EQ(r["output"]["matrix"]["b"], json({{0, -1, 0}, {1, 0, -1}, {0, 1, 0}}));
  EXPECT_EQ(r["matrix_check"], true);
  EXPECT_EQ(r["split"]["replay_ok"], true);
  EXPECT_EQ(r["state"]["history"].size(), 1u);
  EXPECT_EQ(s.get("/state")["matrix"]["b"], b_of(expected));
}

TEST(Server, BareVertexBodyIsAccepted) {
  Served s(read_corpus("triangle.qp"));
  EXPECT_EQ(s.post("/mutate", 2)["vertex"], 2);
}

TEST(Server, UndoRestoresTheInitialState) {
  Served s(read_corpus("species1416.qp"));
  const json initial = s.get("/state");
  s.post("/mutate", {{"vertex", 1}});
  s.post("/mutate", {{"vertex", 2}});
  EXPECT_NE(s.get("/state"), initial);
  s.post("/undo", json::object());
  s.post("/undo", json::object());
  EXPECT_EQ(s.get("/state"), initial);
  EXPECT_EQ(s.post("/undo", json::object(), 400)["error"]["message"], "nothing to undo");
}

TEST(Server, UndefinedMutationIsRejectedWithThePair) {
  Served s(kTwoCycle);
  const json before = s.get("/state");
  const json r = s.post("/mutate", {{"vertex", 1}}, 400);
  const std::string msg = r["error"]["message"];
  EXPECT_NE(msg.find("2-cycle through vertex 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("a (1->2)"), std::string::npos) << msg;
  EXPECT_NE(msg.find("b (2->1)"), std::string::npos) << msg;
  EXPECT_EQ(s.get("/state"), before);
  EXPECT_TRUE(before["matrix"].is_null());
}

TEST(Server, MalformedRequestsAre400) {
  Served s(read_corpus("triangle.qp"));
  EXPECT_EQ(s.post("/mutate", {{"vertex", 9}}, 400)["error"]["kind"], "precondition");
  EXPECT_EQ(s.post("/mutate", {{"vertex", "two"}}, 400)["error"]["kind"], "engine");
  auto r = s.client->Post("/mutate", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  s.get("/jacobian?depth=abc", 400);
  s.get("/jacobian?depth=99", 400);
  s.post("/search", {{"sequence", {1}}, {"trials", 1000000}}, 400);
}

TEST(Server, ConcurrentMutationIsBusy) {
  Served s(read_corpus("triangle.qp"));
  {
    std::lock_guard hold(s.session.mutation_mutex());
    EXPECT_EQ(s.post("/mutate", {{"vertex", 2}}, 409)["error"]["kind"], "busy");
    s.post("/undo", json::object(), 409);
    s.get("/state");
  }
  s.post("/mutate", {{"vertex", 2}});
}

TEST(Server, Jacobian) {
  Served s(read_corpus("triangle.qp"));
  EXPECT_EQ(s.get("/jacobian?depth=5")["dims"], json({3, 3, 0, 0, 0, 0}));
  EXPECT_EQ(s.get("/jacobian")["depth"], 6);
}

TEST(Server, SearchIsReproducible) {
  Served s(read_corpus("species1416.qp"));
  const json body = {{"sequence", {1, 2, 1}}, {"trials", 100}, {"seed", 7}};
  const json a = s.post("/search", body);
  EXPECT_EQ(a["found"], true);
  EXPECT_EQ(a["trials_used"], 1);
  EXPECT_EQ(s.post("/search", body), a);
}

TEST(Server, StateEqualsBatchReplay) {
  const std::string text = read_corpus("species1416.qp");
  Served s(text);
  for (int k : {2, 1, 3}) s.post("/mutate", {{"vertex", k}});
  InputDocument doc = parse_document(text);
  doc.history = {1, 0, 2};
  SessionState batch(doc);
  EXPECT_EQ(s.get("/state"), batch.state_json());
  // the saved session reloads to the same state
  SessionState reloaded(parse_document(format_document(s.session.save())));
  EXPECT_EQ(reloaded.state_json(), batch.state_json());
}

TEST(Server, PortFromEnvironment) {
  ::setenv("QPS_PORT", "18123", 1);
  EXPECT_EQ(server_port_from_env(), 18123);
  ::setenv("QPS_PORT", "80x", 1);
  EXPECT_THROW(server_port_from_env(), EngineError);
  ::unsetenv("QPS_PORT");
  EXPECT_EQ(server_port_from_env(), kDefaultPort);
}
