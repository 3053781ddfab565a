// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <string>

#include "ksfusion/error.hpp"

namespace ksf::detail {

inline boost::property_tree::ptree read_ini(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::Io, e.what());
  }
  return tree;
}

/// Value at `key` ("section.name"), or `fallback` when absent. Throws
/// Error(InvalidArgument) when present but not convertible.
template <typename T>
T ini_get(const boost::property_tree::ptree& tree, const std::string& key, T fallback) {
  const auto child = tree.get_child_optional(boost::property_tree::ptree::path_type(key, '.'));
  if (!child) return fallback;
  try {
    return child->get_value<T>();
  } catch (const boost::property_tree::ptree_bad_data&) {
    throw Error(ErrorCode::InvalidArgument, "bad value for " + key + ": '" + child->data() + "'");
  }
}

}  // namespace ksf::detail
