#include "emoreg/library.hpp"

#include <cmath>

#include "emoreg/error.hpp"

namespace emoreg {

SongLibrary::SongLibrary(std::vector<SongRecord> songs) : songs_(std::move(songs)) {
  std::size_t width = 0;
  for (std::size_t i = 0; i < songs_.size(); ++i) {
    const auto& s = songs_[i];
    if (!index_.emplace(s.song_id, i).second) {
      throw Error(ErrorCode::validation, "duplicate song id '" + s.song_id + "'");
    }
    if (s.feature_vector) {
      if (width == 0) width = s.feature_vector->size();
      if (s.feature_vector->size() != width) {
        throw Error(ErrorCode::dimension_mismatch, "song '" + s.song_id + "' has a feature vector of a different length");
      }
      for (double v : *s.feature_vector) {
        if (!std::isfinite(v)) throw Error(ErrorCode::validation, "song '" + s.song_id + "' has non-finite features");
      }
    }
    by_quadrant_[static_cast<std::size_t>(s.annotation_quadrant()) - 1].push_back(i);
  }
}

const SongRecord* SongLibrary::find(std::string_view song_id) const {
  const auto it = index_.find(std::string(song_id));
  return it == index_.end() ? nullptr : &songs_[it->second];
}

const SongRecord& SongLibrary::at(std::string_view song_id) const {
  if (const auto* s = find(song_id)) return *s;
  throw Error(ErrorCode::not_found, "unknown song '" + std::string(song_id) + "'");
}

std::span<const std::size_t> SongLibrary::quadrant_members(Quadrant q) const {
  return by_quadrant_[static_cast<std::size_t>(q) - 1];
}

std::vector<const SongRecord*> SongLibrary::songs_with_features() const {
  std::vector<const SongRecord*> out;
  for (const auto& s : songs_) {
    if (s.feature_vector) out.push_back(&s);
  }
  return out;
}

Matrix SongLibrary::feature_matrix() const {
  Matrix m;
  for (const auto* s : songs_with_features()) m.append_row(*s->feature_vector);
  return m;
}

}  // namespace emoreg
