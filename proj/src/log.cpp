#include "irf/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

namespace irf {

spdlog::logger& logger() {
    static std::shared_ptr<spdlog::logger> instance = [] {
        auto l = spdlog::stderr_color_mt("irf");
        l->set_level(spdlog::level::warn);
        l->set_pattern("[%l] %v");
        return l;
    }();
    return *instance;
}

}  // namespace irf
