#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emoreg/domain.hpp"
#include "emoreg/matrix.hpp"

namespace emoreg {

// Immutable song collection indexed by id and by annotation quadrant.
class SongLibrary {
 public:
  SongLibrary() = default;
  explicit SongLibrary(std::vector<SongRecord> songs);

  const std::vector<SongRecord>& songs() const noexcept { return songs_; }
  std::size_t size() const noexcept { return songs_.size(); }

  const SongRecord* find(std::string_view song_id) const;
  const SongRecord& at(std::string_view song_id) const;  // throws not_found

  // Positions in songs() whose annotation falls in the quadrant.
  std::span<const std::size_t> quadrant_members(Quadrant q) const;

  // Songs carrying a feature vector, in library order, and their matrix.
  std::vector<const SongRecord*> songs_with_features() const;
  Matrix feature_matrix() const;

 private:
  std::vector<SongRecord> songs_;
  std::unordered_map<std::string, std::size_t> index_;
  std::array<std::vector<std::size_t>, 4> by_quadrant_;
};

}  // namespace emoreg
