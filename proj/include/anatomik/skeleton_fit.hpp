#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "anatomik/losses.hpp"
#include "anatomik/pose.hpp"
#include "anatomik/skeleton.hpp"

namespace anatomik {

/// Rescale a pose onto known bone lengths while preserving every bone
/// direction: walking the tree parent-before-child, each child is placed at
/// its fitted parent plus the target length along the input bone direction.
/// The root stays at the origin. Throws DegeneratePoseError when an input
/// bone is too short for its direction to be defined.
inline Pose3D fit_skeleton(const Pose3D& pose, const std::vector<double>& target_lengths,
                           const Skeleton& skel) {
  if (target_lengths.size() != skel.bones.size())
    throw std::invalid_argument("fit_skeleton: need one target length per bone");
  for (std::size_t i = 0; i < target_lengths.size(); ++i)
    if (!(target_lengths[i] > 0.0))
      throw std::invalid_argument("fit_skeleton: target length for bone '" +
                                  skel.bones[i].name + "' must be > 0");

  const Pose3D centered = root_center(pose);
  Pose3D out;
  for (int b : skel.topological_bone_order()) {
    const Bone& bone = skel.bones[static_cast<std::size_t>(b)];
    const Vec3 v = bone_vector(centered, bone);
    const double len = v.norm();
    if (len < detail::kGeometryLengthEps)
      throw DegeneratePoseError("fit_skeleton: bone '" + bone.name +
                                "' has undefined direction (length " + std::to_string(len) +
                                " mm)");
    out[bone.child] = out[bone.parent] + target_lengths[static_cast<std::size_t>(b)] * (v / len);
  }
  return out;
}

/// Target lengths from the skeleton's canonical table with optional
/// per-bone overrides keyed by bone name.
inline std::vector<double> resolve_target_lengths(
    const Skeleton& skel, const std::map<std::string, double>& overrides = {}) {
  std::vector<double> lengths = skel.canonical_lengths;
  for (const auto& [name, mm] : overrides) {
    const int b = skel.bone_index(name);
    if (b < 0) throw std::invalid_argument("unknown bone '" + name + "' in length overrides");
    lengths[static_cast<std::size_t>(b)] = mm;
  }
  return lengths;
}

}  // namespace anatomik
