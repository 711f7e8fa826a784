#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace irf {

/// Library-wide logger writing to stderr. Default level is "warn".
spdlog::logger& logger();

}  // namespace irf
