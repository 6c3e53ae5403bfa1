#include "mimgan/mimgan.h"

#include <cstdlib>
#include <exception>
#include <sstream>
#include <string>

#include "core/checkpoint.hpp"
#include "core/config.hpp"
#include "core/error.hpp"
#include "core/gradcheck_suite.hpp"
#include "core/io.hpp"
#include "core/pipeline.hpp"

struct mimgan_config {
  mimgan::ConfigSources sources;
};

struct mimgan_model {
  mimgan::Checkpoint checkpoint;
  std::string path;
};

struct mimgan_text {
  std::string value;
};

namespace {

thread_local std::string last_error;

mimgan_status fail(mimgan_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <class F>
mimgan_status guarded(F&& body) {
  try {
    body();
    return MIMGAN_OK;
  } catch (const mimgan::ConfigError& e) {
    return fail(MIMGAN_CONFIG, e.what());
  } catch (const mimgan::NumericError& e) {
    return fail(MIMGAN_NUMERIC, e.what());
  } catch (const mimgan::IoError& e) {
    return fail(MIMGAN_IO, e.what());
  } catch (const mimgan::VersionError& e) {
    return fail(MIMGAN_VERSION, e.what());
  } catch (const mimgan::DomainError& e) {
    return fail(MIMGAN_DOMAIN, e.what());
  } catch (const mimgan::ShapeError& e) {
    return fail(MIMGAN_SHAPE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MIMGAN_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MIMGAN_INTERNAL, e.what());
  } catch (...) {
    return fail(MIMGAN_INTERNAL, "unknown failure");
  }
}

void emit(mimgan_text** out, std::string value) {
  if (out) *out = new mimgan_text{std::move(value)};
}

// Rejects unknown keys and unparseable values at the layer that supplied them.
void check_layer(const mimgan::KeyValues& kv, const char* origin) {
  mimgan::RunConfig probe;
  for (const auto& [k, v] : kv) {
    try {
      probe.set(k, v);
    } catch (const mimgan::ConfigError& e) {
      throw mimgan::ConfigError(std::string(e.what()) + " (from " + origin + ")");
    }
  }
}

#define MIMGAN_REQUIRE(cond, what) \
  if (!(cond)) return fail(MIMGAN_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* mimgan_version(void) { return "1.0.0"; }

uint32_t mimgan_checkpoint_format(void) { return mimgan::kCheckpointVersion; }

const char* mimgan_status_name(mimgan_status status) {
  switch (status) {
    case MIMGAN_OK: return "ok";
    case MIMGAN_INVALID_ARGUMENT: return "invalid argument";
    case MIMGAN_CONFIG: return "configuration error";
    case MIMGAN_NUMERIC: return "numeric failure";
    case MIMGAN_IO: return "i/o error";
    case MIMGAN_VERSION: return "version mismatch";
    case MIMGAN_DOMAIN: return "domain error";
    case MIMGAN_SHAPE: return "shape error";
    case MIMGAN_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mimgan_last_error(void) { return last_error.c_str(); }

const char* mimgan_text_data(const mimgan_text* text) { return text ? text->value.c_str() : ""; }
size_t mimgan_text_size(const mimgan_text* text) { return text ? text->value.size() : 0; }
void mimgan_text_free(mimgan_text* text) { delete text; }

mimgan_status mimgan_config_create(mimgan_config** out) {
  MIMGAN_REQUIRE(out, "config_create: out is null");
  return guarded([&] { *out = new mimgan_config{}; });
}

void mimgan_config_free(mimgan_config* config) { delete config; }

mimgan_status mimgan_config_load_file(mimgan_config* config, const char* path) {
  MIMGAN_REQUIRE(config && path, "config_load_file: null argument");
  return guarded([&] {
    mimgan::KeyValues kv = mimgan::io::read_kv_file(path);
    check_layer(kv, path);
    for (auto& [k, v] : kv) config->sources.file[k] = std::move(v);
  });
}

mimgan_status mimgan_config_apply_env(mimgan_config* config) {
  MIMGAN_REQUIRE(config, "config_apply_env: config is null");
  return guarded([&] {
    mimgan::KeyValues kv = mimgan::env_overrides([](const char* name) { return std::getenv(name); });
    check_layer(kv, "env");
    config->sources.env = std::move(kv);
  });
}

mimgan_status mimgan_config_set(mimgan_config* config, const char* key, const char* value) {
  MIMGAN_REQUIRE(config && key && value, "config_set: null argument");
  return guarded([&] {
    check_layer({{key, value}}, "flag");
    config->sources.flags[key] = value;
  });
}

mimgan_status mimgan_config_get(const mimgan_config* config, const char* key, mimgan_text** out) {
  MIMGAN_REQUIRE(config && key && out, "config_get: null argument");
  return guarded([&] {
    const mimgan::KeyValues kv = mimgan::resolve_config(config->sources).config.to_kv();
    const auto it = kv.find(key);
    if (it == kv.end()) throw mimgan::ConfigError(std::string("unknown key '") + key + "'");
    emit(out, it->second);
  });
}

mimgan_status mimgan_config_dump(const mimgan_config* config, mimgan_text** out) {
  MIMGAN_REQUIRE(config && out, "config_dump: null argument");
  return guarded([&] { emit(out, mimgan::format_resolved(mimgan::resolve_config(config->sources))); });
}

mimgan_status mimgan_train(const mimgan_config* config, const char* resume, mimgan_text** report) {
  MIMGAN_REQUIRE(config, "train: config is null");
  return guarded([&] {
    const auto r = mimgan::pipeline::run_train(mimgan::resolve_config(config->sources), resume ? resume : "");
    std::ostringstream os;
    os << "epochs: " << r.epochs << "\nsteps: " << r.steps << "\nstopped_early: " << (r.stopped_early ? 1 : 0)
       << "\nfinal_rolling_d_loss: " << mimgan::io::format_double(r.final_rolling_d_loss)
       << "\ncheckpoint: " << r.checkpoint << "\ncheckpoints_written: " << r.checkpoints_written
       << "\nmetrics_log: " << r.metrics_log << "\nconfig_echo: " << r.config_echo << '\n';
    emit(report, os.str());
  });
}

mimgan_status mimgan_detect(const mimgan_config* config, mimgan_text** summary) {
  MIMGAN_REQUIRE(config, "detect: config is null");
  return guarded([&] { emit(summary, mimgan::pipeline::run_detect(mimgan::resolve_config(config->sources)).summary); });
}

mimgan_status mimgan_synth(const char* spec, uint64_t seed, const char* path, mimgan_text** report) {
  MIMGAN_REQUIRE(path, "synth: path is null");
  return guarded([&] {
    const mimgan::data::SynthSpec s =
        mimgan::data::SynthSpec::from_kv(spec ? mimgan::io::parse_kv(spec, "<synth spec>") : mimgan::KeyValues{});
    const mimgan::data::SynthResult r = mimgan::pipeline::run_synth(s, seed, path);
    std::size_t anomalous = 0;
    for (int l : *r.series.labels) anomalous += static_cast<std::size_t>(l);
    std::ostringstream os;
    os << "path: " << path << "\ntimesteps: " << r.series.length << "\nvariables: " << r.series.width
       << "\nevents: " << r.events.size() << "\nanomalous_timesteps: " << anomalous << '\n';
    emit(report, os.str());
  });
}

mimgan_status mimgan_eval(const char* predictions, const char* truth, const char* label_column,
                          mimgan_text** report) {
  MIMGAN_REQUIRE(predictions && truth, "eval: null path");
  return guarded([&] {
    emit(report, mimgan::pipeline::run_eval(predictions, truth, label_column ? label_column : "label").report);
  });
}

mimgan_status mimgan_gradcheck(size_t seeds, uint64_t base_seed, double tolerance, mimgan_text** report) {
  MIMGAN_REQUIRE(seeds > 0, "gradcheck: seeds must be positive");
  bool passed = false;
  const mimgan_status s = guarded([&] {
    const mimgan::SuiteResult r = mimgan::run_gradcheck_suite(seeds, base_seed);
    passed = r.passed(tolerance);
    emit(report, mimgan::format_suite(r, tolerance));
  });
  if (s != MIMGAN_OK) return s;
  return passed ? MIMGAN_OK : fail(MIMGAN_NUMERIC, "gradient check exceeded the tolerance");
}

mimgan_status mimgan_model_load(const char* checkpoint, mimgan_model** out) {
  MIMGAN_REQUIRE(checkpoint && out, "model_load: null argument");
  return guarded([&] { *out = new mimgan_model{mimgan::load_checkpoint(checkpoint), checkpoint}; });
}

void mimgan_model_free(mimgan_model* model) { delete model; }

mimgan_status mimgan_model_info(const mimgan_model* model, mimgan_text** out) {
  MIMGAN_REQUIRE(model && out, "model_info: null argument");
  return guarded([&] {
    const mimgan::TrainState& s = model->checkpoint.state;
    std::ostringstream os;
    os << "checkpoint: " << model->path << "\nformat_version: " << mimgan::kCheckpointVersion
       << "\nepoch: " << s.epoch << "\nstep: " << s.step << "\nstopped_early: " << (s.stopped_early ? 1 : 0)
       << "\nnormalization: " << (model->checkpoint.norm ? "stored" : "absent") << '\n';
    for (const auto& [k, v] : mimgan::to_kv(s.params.config)) os << "net." << k << ": " << v << '\n';
    for (const auto& [k, v] : model->checkpoint.config) os << "config." << k << ": " << v << '\n';
    emit(out, os.str());
  });
}

}  // extern "C"
