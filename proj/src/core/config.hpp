#pragma once

#include <string>

#include "core/trainer.hpp"

namespace distner {

// Sets one run option by name ("seed", "lambda", "epochs", ...). Unknown keys
// and unparseable values are invalid-argument errors.
void set_config_key(TrainerConfig& cfg, const std::string& key, const std::string& value);

// Flat key=value text, one pair per line. '#' starts a comment, blank lines
// are skipped. Later lines override earlier ones.
void apply_config_text(TrainerConfig& cfg, const std::string& text);

// Every option as key=value lines in a fixed order; the exact format
// apply_config_text reads back.
std::string dump_config(const TrainerConfig& cfg);

}  // namespace distner
