// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "ksfusion/aggregators.hpp"
#include "ksfusion/fusion.hpp"
#include "ksfusion/metrics.hpp"

namespace ksf {

struct StressMapConfig {
  std::optional<std::filesystem::path> matrix;  // default matrix when unset
  std::size_t capacity = 16;
  int max_depth = 12;
  std::uint64_t min_count = 1;
};

struct Config {
  std::filesystem::path store_path = "ksfusion.db";
  std::string listen_host = "127.0.0.1";
  std::uint16_t listen_port = 7447;
  FusionConfig fusion;
  TransmitSchedule vda_schedule;
  StressMapConfig stressmap;
  MetricFloors floors;
  HandoverConfig handover;

  /// Throws Error(InvalidArgument).
  void validate() const;

  /// INI file with the sections [store], [listener], [fusion], [vda],
  /// [stressmap] and [metrics]; missing keys keep their defaults. Relative
  /// paths are resolved against the file's directory. Throws Error(Io,
  /// InvalidArgument).
  static Config load(const std::filesystem::path& path);
};

}  // namespace ksf
