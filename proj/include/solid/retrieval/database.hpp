#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "solid/core/types.hpp"
#include "solid/descriptor/descriptor.hpp"
#include "solid/retrieval/kdtree.hpp"

namespace solid {

/// One stored frame: id, optional sensor position (for ground truth), and
/// the descriptor pair.
struct FrameRecord {
  std::int64_t frame_id = 0;
  std::optional<Eigen::Vector3d> position;
  SolidDescriptor desc;
};

/// Ordered descriptor store with an optional exact kd-tree index over
/// unit-normalized R-SOLiD vectors. Frame ids are strictly increasing and
/// either every record carries a position or none does. Once the index is
/// built the database is treated as immutable; concurrent reads are safe.
class DescriptorDatabase {
 public:
  explicit DescriptorDatabase(BinningConfig config = {}) : config_(std::move(config)) {
    config_.validate();
  }

  const BinningConfig& config() const { return config_; }
  const std::vector<FrameRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  bool has_positions() const { return !records_.empty() && records_.front().position.has_value(); }

  void add(FrameRecord rec) {
    if (rec.desc.r_solid.size() != config_.n_r || rec.desc.a_solid.size() != config_.n_a)
      throw std::invalid_argument("database: descriptor dimensions do not match config");
    if (rec.frame_id != rec.desc.frame_id)
      throw std::invalid_argument("database: record/descriptor frame_id mismatch");
    if (!records_.empty()) {
      if (rec.frame_id <= records_.back().frame_id)
        throw std::invalid_argument("database: frame ids must be strictly increasing");
      if (rec.position.has_value() != has_positions())
        throw std::invalid_argument("database: records must uniformly carry positions or not");
    }
    records_.push_back(std::move(rec));
    index_.reset();
  }

  /// Builds the exact kd-tree over unit-normalized r_solid vectors.
  /// Zero-norm descriptors (empty scans) are left out of the index.
  void build_index() {
    std::vector<int> rows;
    rows.reserve(records_.size());
    for (int r = 0; r < static_cast<int>(records_.size()); ++r)
      if (records_[r].desc.r_solid.norm() > 0.0) rows.push_back(r);

    Eigen::MatrixXd pts(rows.size(), config_.n_r);
    std::vector<std::int64_t> keys(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const FrameRecord& rec = records_[rows[i]];
      pts.row(i) = rec.desc.r_solid.normalized().transpose();
      keys[i] = rec.frame_id;
    }

    Index idx;
    idx.tree.build(pts, std::move(keys));
    idx.record_of_point = std::move(rows);
    index_ = std::move(idx);
  }

  bool has_index() const { return index_.has_value(); }

  const KdTree& index_tree() const {
    if (!index_) throw std::logic_error("database: index not built");
    return index_->tree;
  }

  /// Record index behind a kd-tree point index.
  int record_of_index_point(int point) const {
    if (!index_) throw std::logic_error("database: index not built");
    return index_->record_of_point[point];
  }

 private:
  struct Index {
    KdTree tree;
    std::vector<int> record_of_point;
  };

  BinningConfig config_;
  std::vector<FrameRecord> records_;
  std::optional<Index> index_;
};

// ---------------------------------------------------------------------------
// Binary persistence
//
// Layout (all little-endian):
//   magic "SOLIDDB1" (8 bytes) | u16 version=1 | u16 flags (bit0: positions)
//   | u32 n_r | u32 n_a | u32 n_e | f64 l_max | f64 f_up | f64 f_down
//   | u64 record count
//   | records: u64 frame_id | [f64 x3 position if flag] | f64 x n_r r_solid
//              | f64 x n_a a_solid
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr char kDbMagic[8] = {'S', 'O', 'L', 'I', 'D', 'D', 'B', '1'};
inline constexpr std::uint16_t kDbVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_le(std::istream& in, T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&value), sizeof(T)));
}

}  // namespace detail

inline void save_db(const DescriptorDatabase& db, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open database file for writing: " + path);

  const BinningConfig& cfg = db.config();
  const bool with_positions = db.has_positions();

  out.write(detail::kDbMagic, sizeof(detail::kDbMagic));
  detail::write_le<std::uint16_t>(out, detail::kDbVersion);
  detail::write_le<std::uint16_t>(out, with_positions ? 1 : 0);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.n_r));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.n_a));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.n_e));
  detail::write_le<double>(out, cfg.l_max);
  detail::write_le<double>(out, cfg.f_up);
  detail::write_le<double>(out, cfg.f_down);
  detail::write_le<std::uint64_t>(out, db.size());

  for (const FrameRecord& rec : db.records()) {
    detail::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(rec.frame_id));
    if (with_positions)
      for (int d = 0; d < 3; ++d) detail::write_le<double>(out, (*rec.position)[d]);
    for (Eigen::Index i = 0; i < rec.desc.r_solid.size(); ++i)
      detail::write_le<double>(out, rec.desc.r_solid[i]);
    for (Eigen::Index j = 0; j < rec.desc.a_solid.size(); ++j)
      detail::write_le<double>(out, rec.desc.a_solid[j]);
  }
  if (!out) throw IoError("short write on database file: " + path);
}

inline DescriptorDatabase load_db(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open database file: " + path);

  char magic[8];
  if (!in.read(magic, sizeof(magic)))
    throw DbError(DbError::Kind::Truncated, path + ": file shorter than the magic");
  if (std::memcmp(magic, detail::kDbMagic, sizeof(magic)) != 0)
    throw DbError(DbError::Kind::BadMagic, path + ": not a SOLIDDB1 file");

  std::uint16_t version = 0, flags = 0;
  std::uint32_t n_r = 0, n_a = 0, n_e = 0;
  double l_max = 0, f_up = 0, f_down = 0;
  std::uint64_t count = 0;
  if (!detail::read_le(in, version) || !detail::read_le(in, flags) || !detail::read_le(in, n_r) ||
      !detail::read_le(in, n_a) || !detail::read_le(in, n_e) || !detail::read_le(in, l_max) ||
      !detail::read_le(in, f_up) || !detail::read_le(in, f_down) || !detail::read_le(in, count))
    throw DbError(DbError::Kind::Truncated, path + ": truncated header");
  if (version != detail::kDbVersion)
    throw DbError(DbError::Kind::BadVersion,
                  path + ": unsupported version " + std::to_string(version));
  if (n_r < 1 || n_a < 1 || n_e < 1 || !(l_max > 0.0) || !(f_up > f_down))
    throw DbError(DbError::Kind::Malformed, path + ": invalid binning header");

  BinningConfig cfg;
  cfg.n_r = static_cast<int>(n_r);
  cfg.n_a = static_cast<int>(n_a);
  cfg.n_e = static_cast<int>(n_e);
  cfg.l_max = l_max;
  cfg.f_up = f_up;
  cfg.f_down = f_down;
  // voxel size and variant are not part of the file format; defaults apply
  DescriptorDatabase db(cfg);

  const bool with_positions = (flags & 1u) != 0;
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto truncated = [&](const char* what) {
      return DbError(DbError::Kind::Truncated,
                     path + ": record " + std::to_string(r) + " truncated (" + what + ")");
    };
    std::uint64_t frame_id = 0;
    if (!detail::read_le(in, frame_id)) throw truncated("frame id");

    FrameRecord rec;
    rec.frame_id = static_cast<std::int64_t>(frame_id);
    if (with_positions) {
      Eigen::Vector3d pos;
      for (int d = 0; d < 3; ++d)
        if (!detail::read_le(in, pos[d])) throw truncated("position");
      rec.position = pos;
    }
    rec.desc.frame_id = rec.frame_id;
    rec.desc.r_solid.resize(cfg.n_r);
    for (int i = 0; i < cfg.n_r; ++i)
      if (!detail::read_le(in, rec.desc.r_solid[i])) throw truncated("r_solid");
    rec.desc.a_solid.resize(cfg.n_a);
    for (int j = 0; j < cfg.n_a; ++j)
      if (!detail::read_le(in, rec.desc.a_solid[j])) throw truncated("a_solid");

    try {
      db.add(std::move(rec));
    } catch (const std::invalid_argument& e) {
      throw DbError(DbError::Kind::Malformed,
                    path + ": record " + std::to_string(r) + ": " + e.what());
    }
  }

  char extra;
  if (in.read(&extra, 1))
    throw DbError(DbError::Kind::Malformed, path + ": trailing bytes after last record");
  return db;
}

}  // namespace solid
