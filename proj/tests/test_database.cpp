#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "solid/retrieval/database.hpp"
#include "support/synthetic.hpp"

using namespace solid;
using testsupport::TempDir;

namespace {

DescriptorDatabase sample_db(bool with_positions, int count = 3) {
  BinningConfig cfg;
  cfg.n_r = 4;
  cfg.n_a = 6;
  cfg.n_e = 3;
  cfg.l_max = 50.0;
  cfg.f_up = 10.0;
  cfg.f_down = -20.0;

  std::mt19937_64 gen(127);
  std::uniform_real_distribution<double> value(0.0, 9.0);
  DescriptorDatabase db(cfg);
  for (int i = 0; i < count; ++i) {
    FrameRecord rec;
    rec.frame_id = i * 2 + 1;  // ids need not be contiguous
    if (with_positions) rec.position = Eigen::Vector3d(value(gen), value(gen), value(gen));
    rec.desc.frame_id = rec.frame_id;
    rec.desc.r_solid.resize(cfg.n_r);
    rec.desc.a_solid.resize(cfg.n_a);
    for (int d = 0; d < cfg.n_r; ++d) rec.desc.r_solid(d) = value(gen);
    for (int d = 0; d < cfg.n_a; ++d) rec.desc.a_solid(d) = value(gen);
    db.add(std::move(rec));
  }
  return db;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("database enforces its record invariants") {
  BinningConfig cfg;
  cfg.n_r = 4;
  cfg.n_a = 6;
  DescriptorDatabase db(cfg);

  FrameRecord rec;
  rec.frame_id = 5;
  rec.desc.frame_id = 5;
  rec.desc.r_solid = Eigen::VectorXd::Ones(4);
  rec.desc.a_solid = Eigen::VectorXd::Ones(6);
  db.add(rec);

  SECTION("frame ids must strictly increase") {
    CHECK_THROWS_AS(db.add(rec), std::invalid_argument);
  }
  SECTION("descriptor dimensions must match the config") {
    FrameRecord bad = rec;
    bad.frame_id = 9;
    bad.desc.frame_id = 9;
    bad.desc.r_solid = Eigen::VectorXd::Ones(5);
    CHECK_THROWS_AS(db.add(bad), std::invalid_argument);
  }
  SECTION("positions are all-or-nothing") {
    FrameRecord bad = rec;
    bad.frame_id = 9;
    bad.desc.frame_id = 9;
    bad.position = Eigen::Vector3d::Zero();
    CHECK_THROWS_AS(db.add(bad), std::invalid_argument);
  }
}

TEST_CASE("save/load round trip preserves structure") {
  TempDir tmp("db_rt");
  for (const bool with_positions : {true, false}) {
    const DescriptorDatabase db = sample_db(with_positions);
    const auto path = tmp.file(with_positions ? "pos.db" : "nopos.db");
    save_db(db, path);

    const DescriptorDatabase loaded = load_db(path);
    CHECK(loaded.config().n_r == db.config().n_r);
    CHECK(loaded.config().n_a == db.config().n_a);
    CHECK(loaded.config().n_e == db.config().n_e);
    CHECK(loaded.config().l_max == db.config().l_max);
    CHECK(loaded.config().f_up == db.config().f_up);
    CHECK(loaded.config().f_down == db.config().f_down);
    REQUIRE(loaded.size() == db.size());
    for (std::size_t i = 0; i < db.size(); ++i) {
      const FrameRecord& a = db.records()[i];
      const FrameRecord& b = loaded.records()[i];
      CHECK(a.frame_id == b.frame_id);
      CHECK(a.position.has_value() == b.position.has_value());
      if (a.position) CHECK(*a.position == *b.position);
      CHECK(a.desc.r_solid == b.desc.r_solid);  // bit exact
      CHECK(a.desc.a_solid == b.desc.a_solid);
    }
  }
}

TEST_CASE("save/load/save is byte identical") {
  TempDir tmp("db_bytes");
  const DescriptorDatabase db = sample_db(true, 7);
  const auto a = tmp.file("a.db");
  const auto b = tmp.file("b.db");
  save_db(db, a);
  save_db(load_db(a), b);
  const std::string bytes_a = slurp(a);
  CHECK(!bytes_a.empty());
  CHECK(bytes_a == slurp(b));
}

TEST_CASE("load_db rejects a bad magic") {
  TempDir tmp("db_magic");
  const auto path = tmp.file("bad.db");
  const DescriptorDatabase db = sample_db(false);
  save_db(db, path);
  std::string bytes = slurp(path);
  bytes.replace(0, 4, "XXXX");
  spit(path, bytes);

  try {
    load_db(path);
    FAIL("expected DbError");
  } catch (const DbError& e) {
    CHECK(e.kind() == DbError::Kind::BadMagic);
  }
}

TEST_CASE("load_db rejects an unsupported version") {
  TempDir tmp("db_version");
  const auto path = tmp.file("v9.db");
  save_db(sample_db(false), path);
  std::string bytes = slurp(path);
  bytes[8] = 9;  // u16 version little-endian low byte
  spit(path, bytes);

  try {
    load_db(path);
    FAIL("expected DbError");
  } catch (const DbError& e) {
    CHECK(e.kind() == DbError::Kind::BadVersion);
  }
}

TEST_CASE("load_db names the truncated record") {
  TempDir tmp("db_trunc");
  const auto path = tmp.file("cut.db");
  save_db(sample_db(true, 3), path);
  std::string bytes = slurp(path);
  bytes.resize(bytes.size() - 5);  // cut into the last record
  spit(path, bytes);

  try {
    load_db(path);
    FAIL("expected DbError");
  } catch (const DbError& e) {
    CHECK(e.kind() == DbError::Kind::Truncated);
    CHECK(std::string(e.what()).find("record 2") != std::string::npos);
  }
}

TEST_CASE("load_db rejects trailing bytes") {
  TempDir tmp("db_trail");
  const auto path = tmp.file("extra.db");
  save_db(sample_db(false), path);
  std::string bytes = slurp(path) + "junk";
  spit(path, bytes);

  try {
    load_db(path);
    FAIL("expected DbError");
  } catch (const DbError& e) {
    CHECK(e.kind() == DbError::Kind::Malformed);
  }
}

TEST_CASE("load_db rejects a header with zero bins") {
  TempDir tmp("db_hdr");
  const auto path = tmp.file("zeros.db");
  save_db(sample_db(false), path);
  std::string bytes = slurp(path);
  bytes[12] = 0;
  bytes[13] = 0;
  bytes[14] = 0;
  bytes[15] = 0;  // n_r = 0
  spit(path, bytes);

  try {
    load_db(path);
    FAIL("expected DbError");
  } catch (const DbError& e) {
    CHECK(e.kind() == DbError::Kind::Malformed);
  }
}

TEST_CASE("database file layout is exactly the documented wire format") {
  TempDir tmp("db_layout");
  const auto path = tmp.file("layout.db");
  const DescriptorDatabase db = sample_db(true, 2);
  save_db(db, path);
  const std::string bytes = slurp(path);

  const auto& cfg = db.config();
  const std::size_t header = 8 + 2 + 2 + 4 + 4 + 4 + 8 + 8 + 8 + 8;
  const std::size_t record = 8 + 3 * 8 + cfg.n_r * 8 + cfg.n_a * 8;
  REQUIRE(bytes.size() == header + 2 * record);

  CHECK(bytes.substr(0, 8) == "SOLIDDB1");
  CHECK(bytes[8] == 1);   // version lo
  CHECK(bytes[9] == 0);   // version hi
  CHECK(bytes[10] == 1);  // flags: positions present

  std::uint32_t n_r = 0;
  std::memcpy(&n_r, bytes.data() + 12, 4);
  CHECK(n_r == 4u);

  std::uint64_t count = 0;
  std::memcpy(&count, bytes.data() + 48, 8);
  CHECK(count == 2u);

  std::uint64_t frame0 = 0;
  std::memcpy(&frame0, bytes.data() + 56, 8);
  CHECK(frame0 == 1u);  // first sample record id

  double r0 = 0;
  std::memcpy(&r0, bytes.data() + 56 + 8 + 24, 8);
  CHECK(r0 == db.records()[0].desc.r_solid(0));
}
