#include "core/config.hpp"

#include <sstream>

namespace distner {

namespace {

std::string trim(const std::string& text) {
  std::size_t a = text.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = text.find_last_not_of(" \t\r");
  return text.substr(a, b - a + 1);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  fail(ErrorKind::InvalidArgument, "option '" + key + "' wants a boolean, got '" + value + "'");
  return false;
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty())
    fail(ErrorKind::InvalidArgument, "option '" + key + "' wants an integer, got '" + value + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty() || value[0] == '-')
    fail(ErrorKind::InvalidArgument,
         "option '" + key + "' wants a non-negative integer, got '" + value + "'");
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty())
    fail(ErrorKind::InvalidArgument, "option '" + key + "' wants a number, got '" + value + "'");
  return v;
}

}  // namespace

void set_config_key(TrainerConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "seed") {
    if (value == "unset") {
      cfg.seed_set = false;
      return;
    }
    cfg.seed = parse_uint(key, value);
    cfg.seed_set = true;
  } else if (key == "lambda") {
    cfg.lambda = parse_double(key, value);
  } else if (key == "epochs") {
    cfg.epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "warmup_epochs") {
    cfg.warmup_epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "learning_rate") {
    cfg.learning_rate = parse_double(key, value);
  } else if (key == "weight_decay") {
    cfg.weight_decay = parse_double(key, value);
  } else if (key == "batch_size") {
    cfg.batch_size = static_cast<int>(parse_int(key, value));
  } else if (key == "ues") {
    cfg.ues = parse_bool(key, value);
  } else if (key == "npe") {
    cfg.npe = parse_bool(key, value);
  } else if (key == "min_npe_support") {
    cfg.min_npe_support = parse_int(key, value);
  } else if (key == "k_folds") {
    cfg.k_folds = static_cast<int>(parse_int(key, value));
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(parse_int(key, value));
  } else if (key == "dim") {
    cfg.model.dim = static_cast<int>(parse_int(key, value));
  } else if (key == "hidden") {
    cfg.model.hidden = static_cast<int>(parse_int(key, value));
  } else if (key == "context_window") {
    cfg.model.context_window = static_cast<int>(parse_int(key, value));
  } else if (key == "max_span_len") {
    cfg.model.max_span_len = static_cast<int>(parse_int(key, value));
  } else if (key == "dropout") {
    cfg.model.dropout = parse_double(key, value);
  } else if (key == "o_logit_bias") {
    cfg.model.o_logit_bias = parse_double(key, value);
  } else if (key == "trainable_embeddings") {
    cfg.model.trainable_embeddings = parse_bool(key, value);
  } else {
    fail(ErrorKind::InvalidArgument, "unknown option '" + key + "'");
  }
}

void apply_config_text(TrainerConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Parse,
           "config line " + std::to_string(line_no) + ": expected key=value, got '" + line + "'");
    set_config_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string dump_config(const TrainerConfig& cfg) {
  std::ostringstream out;
  auto num = [](double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  };
  out << "seed=" << (cfg.seed_set ? std::to_string(cfg.seed) : std::string("unset")) << '\n'
      << "lambda=" << num(cfg.lambda) << '\n'
      << "epochs=" << cfg.epochs << '\n'
      << "warmup_epochs=" << cfg.warmup_epochs << '\n'
      << "learning_rate=" << num(cfg.learning_rate) << '\n'
      << "weight_decay=" << num(cfg.weight_decay) << '\n'
      << "batch_size=" << cfg.batch_size << '\n'
      << "ues=" << (cfg.ues ? "true" : "false") << '\n'
      << "npe=" << (cfg.npe ? "true" : "false") << '\n'
      << "min_npe_support=" << cfg.min_npe_support << '\n'
      << "k_folds=" << cfg.k_folds << '\n'
      << "threads=" << cfg.threads << '\n'
      << "dim=" << cfg.model.dim << '\n'
      << "hidden=" << cfg.model.hidden << '\n'
      << "context_window=" << cfg.model.context_window << '\n'
      << "max_span_len=" << cfg.model.max_span_len << '\n'
      << "dropout=" << num(cfg.model.dropout) << '\n'
      << "o_logit_bias=" << num(cfg.model.o_logit_bias) << '\n'
      << "trainable_embeddings=" << (cfg.model.trainable_embeddings ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace distner
