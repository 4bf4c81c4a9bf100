#include "repmc/repmc.h"

#include <cstring>
#include <memory>
#include <string>

#include "repmc/config.hpp"
#include "repmc/experiments.hpp"
#include "repmc/metrics.hpp"

namespace {

thread_local std::string g_last_error;

repmc_status status_from(const repmc::Error& e) {
  g_last_error = e.what();
  switch (e.code()) {
    case repmc::ErrorCode::InvalidArgument: return REPMC_ERR_INVALID_ARGUMENT;
    case repmc::ErrorCode::InvalidConfig: return REPMC_ERR_CONFIG;
    case repmc::ErrorCode::Diverged: return REPMC_ERR_DIVERGED;
    case repmc::ErrorCode::Io: return REPMC_ERR_IO;
  }
  return REPMC_ERR_INTERNAL;
}

template <typename Fn>
repmc_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return REPMC_OK;
  } catch (const repmc::Error& e) {
    return status_from(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return REPMC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return REPMC_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

repmc::RepresentationBatch batch_from(const double* data, size_t count,
                                      size_t dim, const char* name) {
  if (data == nullptr || count == 0 || dim == 0) {
    throw repmc::InvalidArgumentError(std::string(name) +
                                      ": null or empty point buffer");
  }
  repmc::RepresentationBatch batch;
  batch.points.resize(count);
  for (size_t i = 0; i < count; ++i) {
    batch.points[i].assign(data + i * dim, data + (i + 1) * dim);
  }
  return batch;
}

}  // namespace

struct repmc_experiment {
  repmc::ExperimentConfig config;
  repmc::ExperimentOptions options;
};

extern "C" {

const char* repmc_version(void) { return "0.1.0"; }

const char* repmc_last_error(void) { return g_last_error.c_str(); }

void repmc_string_free(char* s) { delete[] s; }

repmc_status repmc_mmd_squared(const double* a, size_t a_count,
                               const double* b, size_t b_count, size_t dim,
                               double sigma, double* out) {
  return guarded([&]() {
    if (out == nullptr) {
      throw repmc::InvalidArgumentError("repmc_mmd_squared: null output");
    }
    repmc::RepresentationBatch ba = batch_from(a, a_count, dim, "repmc_mmd_squared");
    repmc::RepresentationBatch bb = batch_from(b, b_count, dim, "repmc_mmd_squared");
    *out = repmc::mmd_squared(ba, bb, repmc::RbfKernel{sigma});
  });
}

repmc_status repmc_wasserstein2_squared(const double* a, size_t a_count,
                                        const double* b, size_t b_count,
                                        size_t dim, double* out) {
  return guarded([&]() {
    if (out == nullptr) {
      throw repmc::InvalidArgumentError("repmc_wasserstein2_squared: null output");
    }
    repmc::RepresentationBatch ba =
        batch_from(a, a_count, dim, "repmc_wasserstein2_squared");
    repmc::RepresentationBatch bb =
        batch_from(b, b_count, dim, "repmc_wasserstein2_squared");
    *out = repmc::wasserstein2_squared(ba, bb);
  });
}

repmc_status repmc_experiment_create(const char* config_json,
                                     repmc_experiment** out) {
  return guarded([&]() {
    if (config_json == nullptr || out == nullptr) {
      throw repmc::InvalidArgumentError("repmc_experiment_create: null argument");
    }
    auto handle = std::make_unique<repmc_experiment>();
    handle->config = repmc::parse_config(config_json);
    *out = handle.release();
  });
}

void repmc_experiment_free(repmc_experiment* handle) { delete handle; }

repmc_status repmc_experiment_set_outdir(repmc_experiment* handle,
                                         const char* dir) {
  return guarded([&]() {
    if (handle == nullptr || dir == nullptr) {
      throw repmc::InvalidArgumentError("repmc_experiment_set_outdir: null argument");
    }
    handle->options.outdir_override = dir;
  });
}

repmc_status repmc_experiment_set_seeds(repmc_experiment* handle,
                                        const uint64_t* seeds, size_t count) {
  return guarded([&]() {
    if (handle == nullptr || seeds == nullptr || count == 0) {
      throw repmc::InvalidArgumentError("repmc_experiment_set_seeds: null or empty");
    }
    handle->options.seeds_override.assign(seeds, seeds + count);
  });
}

repmc_status repmc_experiment_set_jobs(repmc_experiment* handle, int jobs) {
  return guarded([&]() {
    if (handle == nullptr || jobs < 1) {
      throw repmc::InvalidArgumentError("repmc_experiment_set_jobs: need jobs >= 1");
    }
    handle->options.jobs = jobs;
  });
}

repmc_status repmc_experiment_effective_config(repmc_experiment* handle,
                                               char** json_out) {
  return guarded([&]() {
    if (handle == nullptr || json_out == nullptr) {
      throw repmc::InvalidArgumentError(
          "repmc_experiment_effective_config: null argument");
    }
    *json_out = dup_string(repmc::effective_config_json(handle->config));
  });
}

repmc_status repmc_experiment_run(repmc_experiment* handle, const char* command,
                                  char** report_json_out) {
  return guarded([&]() {
    if (handle == nullptr || command == nullptr) {
      throw repmc::InvalidArgumentError("repmc_experiment_run: null argument");
    }
    std::string report =
        repmc::run_experiment(handle->config, command, handle->options);
    if (report_json_out != nullptr) {
      *report_json_out = dup_string(report);
    }
  });
}

}  // extern "C"
