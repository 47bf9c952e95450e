#pragma once

#include <array>
#include <string_view>
#include <utility>

namespace hforge::coco {

inline constexpr int kNumKeypoints = 17;

inline constexpr std::array<std::string_view, kNumKeypoints> kKeypointNames = {
    "nose",           "left_eye",      "right_eye",  "left_ear",    "right_ear",   "left_shoulder",
    "right_shoulder", "left_elbow",    "right_elbow", "left_wrist", "right_wrist", "left_hip",
    "right_hip",      "left_knee",     "right_knee", "left_ankle",  "right_ankle"};

// 1-based limb pairs as listed in the COCO person category.
inline constexpr std::array<std::pair<int, int>, 19> kSkeleton = {{{16, 14}, {14, 12}, {17, 15}, {15, 13},
                                                                   {12, 13}, {6, 12},  {7, 13},  {6, 7},
                                                                   {6, 8},   {7, 9},   {8, 10},  {9, 11},
                                                                   {2, 3},   {1, 2},   {1, 3},   {2, 4},
                                                                   {3, 5},   {4, 6},   {5, 7}}};

// nose, eyes, ears
inline constexpr std::array<int, 5> kHeadKeypoints = {0, 1, 2, 3, 4};

}  // namespace hforge::coco
