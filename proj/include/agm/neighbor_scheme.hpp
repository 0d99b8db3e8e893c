// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0
//
// Fixed neighbor scheme shared by affinity producers and the merge engine.
// Seven distances, eight offsets each, 56 channels, distance-major order.

#ifndef AGM_NEIGHBOR_SCHEME_HPP
#define AGM_NEIGHBOR_SCHEME_HPP

#include <array>
#include <stdexcept>
#include <string>

namespace agm {

struct Offset {
  int dx = 0, dy = 0;
  bool operator==(const Offset&) const = default;
};

namespace scheme {

inline constexpr int kDistanceCount = 7;
inline constexpr int kOffsetsPerDistance = 8;
inline constexpr int kChannelCount = kDistanceCount * kOffsetsPerDistance;
inline constexpr std::array<int, kDistanceCount> kDistances = {1, 2, 4, 8, 16, 32, 64};

// Offset ranks at distance d, in channel order. Rank r and rank 7-r negate
// each other, so ranks 4..7 form one canonical representative per pixel pair.
inline constexpr std::array<Offset, kOffsetsPerDistance> offset_pattern(int d) {
  return {{{-d, -d}, {0, -d}, {d, -d}, {-d, 0}, {d, 0}, {-d, d}, {0, d}, {d, d}}};
}

inline int channel_index(int distance_rank, int offset_rank) {
  if (distance_rank < 0 || distance_rank >= kDistanceCount)
    throw std::out_of_range("distance rank out of range: " + std::to_string(distance_rank));
  if (offset_rank < 0 || offset_rank >= kOffsetsPerDistance)
    throw std::out_of_range("offset rank out of range: " + std::to_string(offset_rank));
  return distance_rank * kOffsetsPerDistance + offset_rank;
}

inline int distance_rank(int channel) {
  if (channel < 0 || channel >= kChannelCount)
    throw std::out_of_range("channel out of range: " + std::to_string(channel));
  return channel / kOffsetsPerDistance;
}

inline int offset_rank(int channel) {
  if (channel < 0 || channel >= kChannelCount)
    throw std::out_of_range("channel out of range: " + std::to_string(channel));
  return channel % kOffsetsPerDistance;
}

/// Channel with the same distance and negated offset; an involution.
inline int opposite_channel(int channel) {
  return distance_rank(channel) * kOffsetsPerDistance + (7 - offset_rank(channel));
}

inline Offset channel_offset(int channel) {
  int d = kDistances[static_cast<size_t>(distance_rank(channel))];
  return offset_pattern(d)[static_cast<size_t>(offset_rank(channel))];
}

/// True for the canonical half (offset ranks 4..7): each unordered pixel
/// pair has exactly one canonical channel at its distance.
inline bool is_canonical(int channel) { return offset_rank(channel) >= 4; }

// Distance-rank stages used by the staged merge: short, medium, long.
inline constexpr std::array<int, 3> kShortRanks = {0, 1, 2};   // d = 1, 2, 4
inline constexpr std::array<int, 2> kMediumRanks = {3, 4};     // d = 8, 16
inline constexpr std::array<int, 2> kLongRanks = {5, 6};       // d = 32, 64

}  // namespace scheme
}  // namespace agm

#endif  // AGM_NEIGHBOR_SCHEME_HPP
