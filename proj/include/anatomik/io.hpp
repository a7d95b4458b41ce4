#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "anatomik/pose.hpp"
#include "anatomik/skeleton.hpp"
#include "anatomik/tpnet.hpp"

namespace anatomik {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------- skeleton

inline nlohmann::json skeleton_to_json(const Skeleton& s) {
  nlohmann::json j;
  for (const auto& name : kJointNames) j["joints"].push_back(std::string(name));
  for (int p : s.parent) j["parents"].push_back(p);
  j["lr_pairs"] = nlohmann::json::array();
  for (const auto& [r, l] : s.lr_pairs) j["lr_pairs"].push_back({r, l});
  j["symmetry_set"] = nlohmann::json::array();
  for (int b : s.symmetry_set) j["symmetry_set"].push_back(s.bones[static_cast<std::size_t>(b)].name);
  for (std::size_t b = 0; b < s.bones.size(); ++b)
    j["canonical_lengths"][s.bones[b].name] = s.canonical_lengths[b];
  j["ratio_priors"] = nlohmann::json::array();
  for (const auto& rp : s.ratio_priors)
    j["ratio_priors"].push_back({s.bones[static_cast<std::size_t>(rp.bone_a)].name,
                                 s.bones[static_cast<std::size_t>(rp.bone_b)].name, rp.ratio});
  return j;
}

inline Skeleton skeleton_from_json(const nlohmann::json& j) {
  Skeleton s;
  const auto& joints = j.at("joints");
  if (joints.size() != kNumJoints)
    throw ParseError("skeleton: expected 16 joints, got " + std::to_string(joints.size()));
  // The name->index bijection is fixed at build time; files must list the
  // canonical order so indices in files always mean the same joint.
  for (int i = 0; i < kNumJoints; ++i)
    if (joints[static_cast<std::size_t>(i)].get<std::string>() != kJointNames[static_cast<std::size_t>(i)])
      throw ParseError("skeleton: joint " + std::to_string(i) + " must be '" +
                       std::string(kJointNames[static_cast<std::size_t>(i)]) + "'");
  const auto& parents = j.at("parents");
  if (parents.size() != kNumJoints) throw ParseError("skeleton: parents must have 16 entries");
  for (int i = 0; i < kNumJoints; ++i) s.parent[static_cast<std::size_t>(i)] = parents[static_cast<std::size_t>(i)].get<int>();
  detail::build_bones_from_parents(s);

  s.canonical_lengths.assign(s.bones.size(), 0.0);
  for (const auto& [name, mm] : j.at("canonical_lengths").items()) {
    const int b = s.bone_index(name);
    if (b < 0) throw ParseError("skeleton: canonical_lengths names unknown bone '" + name + "'");
    s.canonical_lengths[static_cast<std::size_t>(b)] = mm.get<double>();
  }

  for (const auto& pair : j.at("lr_pairs")) {
    if (pair.size() != 2) throw ParseError("skeleton: lr_pairs entries must be [right,left]");
    s.lr_pairs.emplace_back(pair[0].get<int>(), pair[1].get<int>());
  }
  for (const auto& name : j.at("symmetry_set")) {
    const int b = s.bone_index(name.get<std::string>());
    if (b < 0)
      throw ParseError("skeleton: symmetry_set names unknown bone '" +
                       name.get<std::string>() + "'");
    s.symmetry_set.push_back(b);
  }
  for (const auto& rp : j.at("ratio_priors")) {
    if (rp.size() != 3) throw ParseError("skeleton: ratio_priors entries must be [a,b,ratio]");
    const int a = s.bone_index(rp[0].get<std::string>());
    const int b = s.bone_index(rp[1].get<std::string>());
    if (a < 0 || b < 0) throw ParseError("skeleton: ratio prior names unknown bone");
    s.ratio_priors.push_back(RatioPrior{a, b, rp[2].get<double>()});
  }

  detail::build_default_angle_joints(s);
  validate(s);
  return s;
}

inline Skeleton load_skeleton(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("skeleton file '" + path.string() + "': " + e.what());
  }
  return skeleton_from_json(j);
}

inline void save_skeleton(const Skeleton& s, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << skeleton_to_json(s).dump(2) << '\n';
}

// ---------------------------------------------------------------- sequences

namespace detail {

inline nlohmann::json joints_to_json(const Pose3D& pose) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < kNumJoints; ++i) arr.push_back({pose[i].x(), pose[i].y(), pose[i].z()});
  return arr;
}

inline Pose3D joints_from_json(const nlohmann::json& arr, int line) {
  if (!arr.is_array() || arr.size() != kNumJoints)
    throw ParseError("line " + std::to_string(line) + ": expected 16 joints, got " +
                     std::to_string(arr.size()));
  Pose3D pose;
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& p = arr[static_cast<std::size_t>(i)];
    if (!p.is_array() || p.size() != 3)
      throw ParseError("line " + std::to_string(line) + ": joint " + std::to_string(i) +
                       " must be [x,y,z]");
    for (int c = 0; c < 3; ++c) {
      if (!p[static_cast<std::size_t>(c)].is_number())
        throw ParseError("line " + std::to_string(line) + ": joint " + std::to_string(i) +
                         " has a non-numeric coordinate");
      pose[i][c] = p[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return pose;
}

}  // namespace detail

/// JSON Lines, one object per frame: {"t": int, "joints": [[x,y,z]x16],
/// "gt": optional [[x,y,z]x16]}. The first frame may additionally carry
/// "fps". Serialization uses shortest exact decimal representations, so a
/// save/load round trip reproduces the in-memory values bit for bit.
inline void save_sequence(const PoseSequence& seq, const std::filesystem::path& path) {
  seq.validate();
  auto out = detail::open_for_write(path);
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    nlohmann::json j;
    j["t"] = static_cast<int>(f);
    if (f == 0) j["fps"] = seq.fps;
    j["joints"] = detail::joints_to_json(seq.frames[f]);
    if (seq.ground_truth) j["gt"] = detail::joints_to_json((*seq.ground_truth)[f]);
    out << j.dump() << '\n';
  }
}

inline PoseSequence load_sequence(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  PoseSequence seq;
  std::vector<Pose3D> gt;
  std::string raw;
  int line = 0;
  bool any_gt = false;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("'" + path.string() + "' line " + std::to_string(line) +
                       ": malformed JSON (" + e.what() + ")");
    }
    if (!j.contains("joints"))
      throw ParseError("'" + path.string() + "' line " + std::to_string(line) +
                       ": missing 'joints'");
    if (j.contains("t") && !j["t"].is_number_integer())
      throw ParseError("'" + path.string() + "' line " + std::to_string(line) +
                       ": 't' must be an integer");
    if (j.contains("fps")) seq.fps = j["fps"].get<double>();
    seq.frames.push_back(detail::joints_from_json(j["joints"], line));
    if (j.contains("gt")) {
      any_gt = true;
      gt.push_back(detail::joints_from_json(j["gt"], line));
    } else if (any_gt) {
      throw ParseError("'" + path.string() + "' line " + std::to_string(line) +
                       ": 'gt' present on some frames but not all");
    }
  }
  if (seq.frames.empty()) throw ParseError("'" + path.string() + "': no frames");
  if (any_gt) {
    if (gt.size() != seq.frames.size())
      throw ParseError("'" + path.string() + "': 'gt' present on some frames but not all");
    seq.ground_truth = std::move(gt);
  }
  seq.validate();
  return seq;
}

// ------------------------------------------------------------- tpnet params

inline void save_tpnet_params(const TPNetParams& p, const TPNetConfig& cfg,
                              const std::filesystem::path& path) {
  auto tensor = [](const Eigen::MatrixXd& m) {
    nlohmann::json t;
    t["shape"] = {m.rows(), m.cols()};
    auto& data = t["data"] = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return t;
  };
  nlohmann::json j;
  j["config"] = {{"window", cfg.window},
                 {"mode", to_string(cfg.mode)},
                 {"hidden", cfg.hidden},
                 {"input_dim", cfg.input_dim()},
                 {"output_dim", TPNetConfig::output_dim}};
  j["W1"] = tensor(p.W1);
  j["b1"] = tensor(p.b1);
  j["W2"] = tensor(p.W2);
  j["b2"] = tensor(p.b2);
  auto out = detail::open_for_write(path);
  out << j.dump() << '\n';
}

inline std::pair<TPNetParams, TPNetConfig> load_tpnet_params(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("params file '" + path.string() + "': " + e.what());
  }
  TPNetConfig cfg;
  const auto& jc = j.at("config");
  cfg.window = jc.at("window").get<int>();
  cfg.mode = temporal_mode_from_string(jc.at("mode").get<std::string>());
  cfg.hidden = jc.at("hidden").get<int>();
  cfg.validate();

  auto tensor = [&](const char* name) {
    const auto& t = j.at(name);
    const auto& shape = t.at("shape");
    const Eigen::Index rows = shape[0].get<Eigen::Index>();
    const Eigen::Index cols = shape[1].get<Eigen::Index>();
    const auto& data = t.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw ParseError("params file '" + path.string() + "': tensor '" + name +
                       "' size does not match its shape");
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
    return m;
  };
  TPNetParams p;
  p.W1 = tensor("W1");
  p.b1 = tensor("b1");
  p.W2 = tensor("W2");
  p.b2 = tensor("b2");
  if (!p.shapes_match(cfg))
    throw ParseError("params file '" + path.string() + "': tensors do not match config");
  return {std::move(p), cfg};
}

}  // namespace anatomik
