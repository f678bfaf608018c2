#pragma once

#include <spdlog/spdlog.h>

namespace ssae {

// Configures the default logger from SSAE_LOG (error, info or debug; info
// when unset). Messages go to stderr.
void init_logging();

}  // namespace ssae
