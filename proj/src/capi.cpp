#include "attrforge/capi.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>

#include "attrforge/engine.hpp"
#include "attrforge/gateway.hpp"
#include "attrforge/run_config.hpp"

struct af_engine {
  attrforge::RunConfig config = attrforge::config_defaults();
  std::unique_ptr<attrforge::Engine> engine;
  std::string last_error;
};

namespace {

// Engine construction is deferred so every config layer applied through
// the builder calls lands in one snapshot.
attrforge::Engine& materialized(af_engine* e) {
  if (!e->engine) {
    e->engine = std::make_unique<attrforge::Engine>(e->config);
  }
  return *e->engine;
}

template <typename Fn>
af_status guarded(af_engine* e, Fn&& fn) {
  if (e == nullptr) return AF_ERR_VALIDATION;
  e->last_error.clear();
  try {
    fn();
    return AF_OK;
  } catch (const attrforge::TransportError& ex) {
    e->last_error = ex.what();
    return AF_ERR_BACKEND_UNREACHABLE;
  } catch (const attrforge::PartialFailure& ex) {
    e->last_error = ex.what();
    return AF_ERR_PARTIAL_FAILURE;
  } catch (const std::invalid_argument& ex) {
    e->last_error = ex.what();
    return AF_ERR_VALIDATION;
  } catch (const std::runtime_error& ex) {
    e->last_error = ex.what();
    return AF_ERR_VALIDATION;
  } catch (const std::exception& ex) {
    e->last_error = ex.what();
    return AF_ERR_INTERNAL;
  } catch (...) {
    e->last_error = "unknown error";
    return AF_ERR_INTERNAL;
  }
}

af_status require_arg(af_engine* e, const void* arg, const char* name) {
  if (arg != nullptr) return AF_OK;
  if (e != nullptr) e->last_error = std::string(name) + " must not be null";
  return AF_ERR_VALIDATION;
}

}  // namespace

extern "C" {

af_engine* af_engine_new(void) {
  try {
    return new af_engine();
  } catch (...) {
    return nullptr;
  }
}

void af_engine_free(af_engine* engine) { delete engine; }

af_status af_engine_load_config(af_engine* engine, const char* path) {
  if (af_status s = require_arg(engine, path, "path"); s != AF_OK) return s;
  return guarded(engine, [&] {
    engine->config = attrforge::config_from_file(path);
    engine->engine.reset();
  });
}

af_status af_engine_set(af_engine* engine, const char* key,
                        const char* value) {
  if (af_status s = require_arg(engine, key, "key"); s != AF_OK) return s;
  if (af_status s = require_arg(engine, value, "value"); s != AF_OK) return s;
  return guarded(engine, [&] {
    attrforge::config_set(engine->config, key, value);
    engine->engine.reset();
  });
}

af_status af_engine_apply_env(af_engine* engine) {
  return guarded(engine, [&] {
    attrforge::config_apply_env(engine->config);
    engine->engine.reset();
  });
}

af_status af_engine_force_mock(af_engine* engine) {
  return guarded(engine, [&] {
    attrforge::config_force_mock(engine->config);
    engine->engine.reset();
  });
}

af_status af_run_synth(af_engine* engine, int force) {
  return guarded(engine,
                 [&] { materialized(engine).run_synth(force != 0); });
}

af_status af_run_iterate(af_engine* engine, int iteration, int force) {
  return guarded(engine, [&] {
    materialized(engine).run_iterate(iteration, force != 0);
  });
}

af_status af_run_eval(af_engine* engine, const char* predictions_path,
                      const char* adapter, int force) {
  if (af_status s = require_arg(engine, predictions_path, "predictions_path");
      s != AF_OK) {
    return s;
  }
  if (af_status s = require_arg(engine, adapter, "adapter"); s != AF_OK) {
    return s;
  }
  return guarded(engine, [&] {
    materialized(engine).run_eval(predictions_path, adapter, force != 0);
  });
}

af_status af_run_report(af_engine* engine, int as_json, char** out) {
  if (af_status s = require_arg(engine, out, "out"); s != AF_OK) return s;
  *out = nullptr;
  return guarded(engine, [&] {
    std::string text = materialized(engine).run_report(as_json != 0);
    char* copy = static_cast<char*>(std::malloc(text.size() + 1));
    if (copy == nullptr) throw std::bad_alloc();
    std::memcpy(copy, text.c_str(), text.size() + 1);
    *out = copy;
  });
}

const char* af_last_error(const af_engine* engine) {
  if (engine == nullptr) return "";
  return engine->last_error.c_str();
}

void af_string_free(char* s) { std::free(s); }

const char* af_version(void) { return "0.1.0"; }

}  // extern "C"
