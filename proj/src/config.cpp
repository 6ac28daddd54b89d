#include "velgan/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "velgan/metrics.hpp"

namespace velgan {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r";
  const size_t b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const size_t e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::from_text(const std::string& text) {
  ConfigFile cf;
  std::istringstream in(text);
  std::string line, section;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config: malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::runtime_error("config: empty key");
    cf.set(section.empty() ? key : section + "." + key, trim(line.substr(eq + 1)));
  }
  return cf;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

void ConfigFile::set(const std::string& key, const std::string& value) {
  auto it = index_.find(key);
  if (it != index_.end()) {
    entries_[it->second].second = value;
  } else {
    index_[key] = entries_.size();
    entries_.emplace_back(key, value);
  }
}

void ConfigFile::apply_override(const std::string& key_eq_value) {
  const size_t eq = key_eq_value.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::runtime_error("config: override must look like section.key=value, got '" +
                             key_eq_value + "'");
  set(trim(key_eq_value.substr(0, eq)), trim(key_eq_value.substr(eq + 1)));
}

bool ConfigFile::has(const std::string& key) const { return index_.count(key) != 0; }

std::string ConfigFile::get(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end())
    throw std::runtime_error("config: missing key '" + key + "'");
  return entries_[it->second].second;
}

std::string ConfigFile::get_or(const std::string& key,
                               const std::string& fallback) const {
  auto it = index_.find(key);
  return it == index_.end() ? fallback : entries_[it->second].second;
}

double ConfigFile::get_f64_or(const std::string& key, double fallback) const {
  return has(key) ? std::stod(get(key)) : fallback;
}

int64_t ConfigFile::get_i64_or(const std::string& key, int64_t fallback) const {
  return has(key) ? std::stoll(get(key)) : fallback;
}

void ConfigFile::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("config: cannot write '" + path + "'");
  std::string section;
  for (const auto& [k, v] : entries_) {
    const size_t dot = k.find('.');
    const std::string sec = dot == std::string::npos ? "" : k.substr(0, dot);
    const std::string name = dot == std::string::npos ? k : k.substr(dot + 1);
    if (sec != section) {
      out << "[" << sec << "]\n";
      section = sec;
    }
    out << name << " = " << v << "\n";
  }
  if (!out) throw std::runtime_error("config: write failed for '" + path + "'");
}

nn::GeneratorSpec RunConfig::generator_spec() const {
  nn::GeneratorSpec g;
  g.in_channels = input_channels;
  g.out_channels = 1;
  g.base_width = base_width;
  g.patch_size = prep.patch_size;
  g.dropout_rate = dropout_rate;
  g.noise_mode = noise_mode;
  return g;
}

nn::DiscriminatorSpec RunConfig::discriminator_spec() const {
  nn::DiscriminatorSpec d;
  d.in_channels = input_channels + 1;
  d.base_width = base_width;
  return d;
}

RunConfig RunConfig::from_config(const ConfigFile& cf) {
  RunConfig rc;
  rc.dataset_dir = cf.get_or("dataset.dir", rc.dataset_dir);

  GeoModelConfig& g = rc.geo;
  g.n_inlines = static_cast<int>(cf.get_i64_or("dataset.n_inlines", g.n_inlines));
  g.n_crosslines =
      static_cast<int>(cf.get_i64_or("dataset.n_crosslines", g.n_crosslines));
  g.n_samples = static_cast<int>(cf.get_i64_or("dataset.n_samples", g.n_samples));
  g.dt = cf.get_f64_or("dataset.dt", g.dt);
  g.dx = cf.get_f64_or("dataset.dx", g.dx);
  g.dy = cf.get_f64_or("dataset.dy", g.dy);
  g.n_layers = static_cast<int>(cf.get_i64_or("dataset.n_layers", g.n_layers));
  g.v_water = cf.get_f64_or("dataset.v_water", g.v_water);
  g.v_min = cf.get_f64_or("dataset.v_min", g.v_min);
  g.v_max = cf.get_f64_or("dataset.v_max", g.v_max);
  g.horizon_roughness =
      cf.get_f64_or("dataset.horizon_roughness", g.horizon_roughness);
  g.salt_probability =
      cf.get_f64_or("dataset.salt_probability", g.salt_probability);
  g.salt_velocity = cf.get_f64_or("dataset.salt_velocity", g.salt_velocity);
  g.wavelet_peak_hz = cf.get_f64_or("dataset.wavelet_peak_hz", g.wavelet_peak_hz);
  g.snr_db = cf.get_f64_or("dataset.snr_db", g.snr_db);
  g.seed = static_cast<uint64_t>(cf.get_i64_or("dataset.seed", static_cast<int64_t>(g.seed)));

  PreprocessConfig& p = rc.prep;
  p.crop_top = static_cast<int>(cf.get_i64_or("preprocess.crop_top", p.crop_top));
  p.train_fraction = cf.get_f64_or("preprocess.train_fraction", p.train_fraction);
  p.patch_size = static_cast<int>(cf.get_i64_or("preprocess.patch_size", p.patch_size));
  p.n_train_patches =
      static_cast<int>(cf.get_i64_or("preprocess.n_train_patches", p.n_train_patches));
  p.n_test_patches =
      static_cast<int>(cf.get_i64_or("preprocess.n_test_patches", p.n_test_patches));
  p.seed = static_cast<uint64_t>(
      cf.get_i64_or("preprocess.seed", static_cast<int64_t>(p.seed)));

  rc.input_channels =
      static_cast<int>(cf.get_i64_or("network.input_channels", rc.input_channels));
  rc.base_width = static_cast<int>(cf.get_i64_or("network.base_width", rc.base_width));
  rc.dropout_rate = cf.get_f64_or("network.dropout_rate", rc.dropout_rate);
  const std::string noise = cf.get_or("network.noise_mode", "dropout");
  if (noise == "dropout")
    rc.noise_mode = nn::NoiseMode::dropout;
  else if (noise == "none")
    rc.noise_mode = nn::NoiseMode::none;
  else
    throw std::runtime_error("config: network.noise_mode must be dropout|none");
  p.input_channels = rc.input_channels;

  rc.loss.lambda_l1 = cf.get_f64_or("loss.lambda_l1", rc.loss.lambda_l1);
  const std::string form = cf.get_or("loss.adversarial_form", "non_saturating");
  if (form == "non_saturating")
    rc.loss.adversarial_form = nn::AdversarialForm::non_saturating;
  else if (form == "minimax")
    rc.loss.adversarial_form = nn::AdversarialForm::minimax;
  else
    throw std::runtime_error(
        "config: loss.adversarial_form must be non_saturating|minimax");

  rc.optim.lr = cf.get_f64_or("optim.lr", rc.optim.lr);
  rc.optim.beta1 = cf.get_f64_or("optim.beta1", rc.optim.beta1);
  rc.optim.beta2 = cf.get_f64_or("optim.beta2", rc.optim.beta2);
  rc.optim.epsilon = cf.get_f64_or("optim.epsilon", rc.optim.epsilon);
  rc.optim.batch_size =
      static_cast<int>(cf.get_i64_or("optim.batch_size", rc.optim.batch_size));

  rc.epochs = static_cast<int>(cf.get_i64_or("train.epochs", rc.epochs));
  rc.train_seed = static_cast<uint64_t>(
      cf.get_i64_or("train.seed", static_cast<int64_t>(rc.train_seed)));
  rc.checkpoint_every =
      static_cast<int>(cf.get_i64_or("train.checkpoint_every", rc.checkpoint_every));
  rc.evaluate_every =
      static_cast<int>(cf.get_i64_or("train.evaluate_every", rc.evaluate_every));
  rc.resume = cf.get_or("train.resume", "");

  rc.out_dir = cf.get_or("run.out_dir", rc.out_dir);
  rc.eval_map_patches =
      static_cast<int>(cf.get_i64_or("run.eval_map_patches", rc.eval_map_patches));
  const std::string win = cf.get_or("run.ssim_window", "gaussian");
  if (win == "gaussian")
    rc.ssim_window = SsimConfig::Window::gaussian;
  else if (win == "global")
    rc.ssim_window = SsimConfig::Window::global;
  else
    throw std::runtime_error("config: run.ssim_window must be gaussian|global");
  return rc;
}

void RunConfig::to_config(ConfigFile& cf) const {
  const auto set_f = [&cf](const std::string& k, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    cf.set(k, buf);
  };
  cf.set("dataset.dir", dataset_dir);
  cf.set("dataset.n_inlines", std::to_string(geo.n_inlines));
  cf.set("dataset.n_crosslines", std::to_string(geo.n_crosslines));
  cf.set("dataset.n_samples", std::to_string(geo.n_samples));
  set_f("dataset.dt", geo.dt);
  set_f("dataset.dx", geo.dx);
  set_f("dataset.dy", geo.dy);
  cf.set("dataset.n_layers", std::to_string(geo.n_layers));
  set_f("dataset.v_water", geo.v_water);
  set_f("dataset.v_min", geo.v_min);
  set_f("dataset.v_max", geo.v_max);
  set_f("dataset.horizon_roughness", geo.horizon_roughness);
  set_f("dataset.salt_probability", geo.salt_probability);
  set_f("dataset.salt_velocity", geo.salt_velocity);
  set_f("dataset.wavelet_peak_hz", geo.wavelet_peak_hz);
  set_f("dataset.snr_db", geo.snr_db);
  cf.set("dataset.seed", std::to_string(geo.seed));

  cf.set("preprocess.crop_top", std::to_string(prep.crop_top));
  set_f("preprocess.train_fraction", prep.train_fraction);
  cf.set("preprocess.patch_size", std::to_string(prep.patch_size));
  cf.set("preprocess.n_train_patches", std::to_string(prep.n_train_patches));
  cf.set("preprocess.n_test_patches", std::to_string(prep.n_test_patches));
  cf.set("preprocess.seed", std::to_string(prep.seed));

  cf.set("network.input_channels", std::to_string(input_channels));
  cf.set("network.base_width", std::to_string(base_width));
  set_f("network.dropout_rate", dropout_rate);
  cf.set("network.noise_mode",
         noise_mode == nn::NoiseMode::dropout ? "dropout" : "none");

  set_f("loss.lambda_l1", loss.lambda_l1);
  cf.set("loss.adversarial_form",
         loss.adversarial_form == nn::AdversarialForm::minimax ? "minimax"
                                                               : "non_saturating");

  set_f("optim.lr", optim.lr);
  set_f("optim.beta1", optim.beta1);
  set_f("optim.beta2", optim.beta2);
  set_f("optim.epsilon", optim.epsilon);
  cf.set("optim.batch_size", std::to_string(optim.batch_size));

  cf.set("train.epochs", std::to_string(epochs));
  cf.set("train.seed", std::to_string(train_seed));
  cf.set("train.checkpoint_every", std::to_string(checkpoint_every));
  cf.set("train.evaluate_every", std::to_string(evaluate_every));
  if (!resume.empty()) cf.set("train.resume", resume);

  cf.set("run.out_dir", out_dir);
  cf.set("run.eval_map_patches", std::to_string(eval_map_patches));
  cf.set("run.ssim_window",
         ssim_window == SsimConfig::Window::gaussian ? "gaussian" : "global");
}

}  // namespace velgan
