#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gsamr/tensor.hpp"

namespace gsamr {

// Flat model container: metadata key/values (resolved config, step counter,
// vocabulary hash), the vocabulary bundle, and one little-endian float64
// payload per parameter. Round-trips byte-exactly: parameters are written in
// name order and metadata in key order.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::string vocab_json;
  std::map<std::string, std::pair<Shape, std::vector<double>>> params;

  std::string serialize() const;
  static Checkpoint deserialize(const std::string& bytes);
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace gsamr
