#include "ssae/log.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace ssae {

void init_logging() {
    auto logger = spdlog::stderr_color_mt("ssae");
    logger->set_pattern("[%l] %v");
    auto level = spdlog::level::info;
    if (const char* env = std::getenv("SSAE_LOG")) {
        const std::string_view v(env);
        if (v == "error") level = spdlog::level::err;
        else if (v == "debug") level = spdlog::level::debug;
        else if (v != "info") logger->warn("SSAE_LOG='{}' not recognised; using info", v);
    }
    logger->set_level(level);
    spdlog::set_default_logger(logger);
}

}  // namespace ssae
