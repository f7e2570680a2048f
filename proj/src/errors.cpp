// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include "agrgan/errors.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace agrgan {
namespace {

std::mutex sink_mutex;
WarningSink current_sink;
std::atomic<std::size_t> emitted{0};

}  // namespace

void warn(const std::string& message) {
  ++emitted;
  std::lock_guard<std::mutex> lock(sink_mutex);
  if (current_sink) {
    current_sink(message);
  } else {
    std::cerr << "agrgan: warning: " << message << '\n';
  }
}

WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard<std::mutex> lock(sink_mutex);
  std::swap(current_sink, sink);
  return sink;
}

std::size_t warning_count() { return emitted.load(); }

}  // namespace agrgan
