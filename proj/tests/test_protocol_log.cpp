#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "dcage/errors.hpp"
#include "dcage/event_log.hpp"
#include "dcage/protocol.hpp"
#include "fuzz.hpp"

using namespace dcage;
using namespace dcage::protocol;

TEST_CASE("every message type round-trips through encode and decode") {
  fuzz::Gen gen(99);
  for (int i = 0; i < 300; ++i) {
    const WireMessage m = gen.message(static_cast<std::size_t>(i) % fuzz::Gen::kKinds);
    const std::string a = encode(m);
    const WireMessage back = decode(a);
    REQUIRE(back == m);
    REQUIRE(encode(back) == a);
  }
}

TEST_CASE("summary field strings on the wire") {
  VehicleStateSummary s;
  s.vehicle_id = "PLUTO";
  s.driving_mode = DrivingMode::ES;
  s.cage_state = CageState::Occupied;
  s.door_state = DoorState::NoData;
  s.mission_state = MissionState::Blocked;
  const auto j = summary_to_json(s);
  CHECK(j["driving_mode"] == "emergency stop");
  CHECK(j["cage_state"] == "safe zone occupied");
  CHECK(j["door_state"] == "no data");
  CHECK(j["mission_state"] == "blocked");
  CHECK(j["sensor_data"] == "valid");
  CHECK(summary_from_json(j) == s);
}

TEST_CASE("decode rejects malformed input") {
  CHECK_THROWS_AS(decode("not json"), ProtocolError);
  CHECK_THROWS_AS(decode(R"({"type":"Bogus","vehicle_id":"a","seq":1,"timestamp":0,"payload":{}})"), ProtocolError);
  CHECK_THROWS_AS(decode(R"({"type":"Ack","vehicle_id":"a","seq":1,"timestamp":0,"payload":{}})"), ProtocolError);
}

TEST_CASE("frame reader splits a byte stream") {
  fuzz::Gen gen(5);
  std::string stream;
  std::vector<WireMessage> sent;
  for (int i = 0; i < 20; ++i) {
    sent.push_back(gen.message(static_cast<std::size_t>(i) % fuzz::Gen::kKinds));
    stream += frame(sent.back());
  }
  FrameReader reader;
  std::vector<WireMessage> got;
  for (std::size_t i = 0; i < stream.size(); i += 7) {
    reader.feed(std::string_view(stream).substr(i, 7));
    while (auto body = reader.next()) got.push_back(decode(*body));
  }
  CHECK(got == sent);

  FrameReader huge;
  huge.feed(std::string("\x7f\xff\xff\xff", 4));
  CHECK_THROWS_AS(huge.next(), ProtocolError);
}

TEST_CASE("event log lines round-trip") {
  fuzz::Gen gen(17);
  EventLogWriter w;
  std::vector<EventLogEntry> entries;
  for (std::uint64_t i = 1; i <= 60; ++i) {
    entries.push_back({i, static_cast<std::int64_t>(i * 50),
                       static_cast<Direction>(i % 3), gen.message(i % fuzz::Gen::kKinds)});
    w.append(entries.back());
  }
  std::istringstream in(w.contents());
  const auto back = read_log(in);
  CHECK(back == entries);
  for (const auto& e : entries) CHECK(to_line(from_line(to_line(e))) == to_line(e));
}

TEST_CASE("file-backed log") {
  const auto dir = std::filesystem::temp_directory_path() / "dcage_log_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "nested" / "log.ndjson";
  {
    EventLogWriter w(path);
    w.append({1, 0, Direction::FromVehicle, WireMessage{"V", 1, 0, Register{"x", 50}}});
    w.append({2, 10, Direction::ToVehicle, WireMessage{"V", 1, 10, Command{SetDrivingMode{DrivingMode::LAD}}}});
    w.flush();
  }
  const auto entries = read_log(path);
  REQUIRE(entries.size() == 2);
  CHECK(entries[1].direction == Direction::ToVehicle);
  std::filesystem::remove_all(dir);
}

TEST_CASE("replay paces, validates and reports corruption") {
  EventLogWriter w;
  for (std::uint64_t i = 1; i <= 3; ++i) {
    w.append({i, static_cast<std::int64_t>(i * 100), Direction::Internal, WireMessage{"V", i, 0, Event{"k", "a", "b"}}});
  }
  std::vector<std::int64_t> sleeps;
  std::size_t seen = 0;
  std::istringstream in(w.contents());
  CHECK(replay(in, 2.0, [&](const EventLogEntry&) { ++seen; }, [&](std::int64_t ms) { sleeps.push_back(ms); }) == 3);
  CHECK(seen == 3);
  CHECK(sleeps == std::vector<std::int64_t>{50, 50});

  std::istringstream empty("");
  CHECK(replay(empty, 1.0, [](const EventLogEntry&) {}) == 0);

  std::istringstream again(w.contents());
  CHECK_THROWS_AS(replay(again, 0.0, [](const EventLogEntry&) {}), ConfigError);

  std::istringstream corrupt(w.contents() + "{broken\n");
  std::size_t before = 0;
  try {
    replay(corrupt, 1.0, [&](const EventLogEntry&) { ++before; });
    FAIL("expected corruption");
  } catch (const LogCorruptError& e) {
    CHECK(e.line() == 4);
  }
  CHECK(before == 3);

  // Out-of-order global_seq is corruption too.
  const std::string lines = w.contents();
  const auto first_nl = lines.find('\n');
  std::istringstream swapped(lines.substr(first_nl + 1) + lines.substr(0, first_nl + 1));
  CHECK_THROWS_AS(read_log(swapped), LogCorruptError);
}
