#include "gfscma/gfscma.h"

#include <cstring>
#include <string>

#include "codebook.hpp"
#include "commands.hpp"
#include "ctu.hpp"
#include "errors.hpp"
#include "models.hpp"
#include "zc.hpp"

namespace {

thread_local std::string g_last_error;

int set_error(int code, const std::string& what) {
  g_last_error = what;
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return GFS_OK;
  } catch (const gfs::InvalidArgument& e) {
    return set_error(GFS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const gfs::ParseError& e) {
    return set_error(GFS_ERR_PARSE, e.what());
  } catch (const gfs::IoError& e) {
    return set_error(GFS_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return set_error(GFS_ERR_RUNTIME, e.what());
  }
}

}  // namespace

struct gfs_preamble_set {
  gfs::PreambleSet set;
};
struct gfs_codebook_set {
  gfs::CodebookSet cbs;
};
struct gfs_ctu_map {
  gfs::CtuMap map;
};
struct gfs_model {
  gfs::ModelBundle<float> bundle;
};

extern "C" {

const char* gfs_last_error(void) { return g_last_error.c_str(); }

int gfs_preamble_set_build(uint32_t n_zc, const uint32_t* roots,
                           size_t n_roots, uint32_t shifts_per_root,
                           gfs_preamble_set** out) {
  return guarded([&] {
    if (!roots || !out) throw gfs::InvalidArgument("null pointer argument");
    gfs::ZcParams params;
    params.n_zc = n_zc;
    params.roots.assign(roots, roots + n_roots);
    auto handle = new gfs_preamble_set{
        gfs::build_preamble_set(params, shifts_per_root)};
    *out = handle;
  });
}

void gfs_preamble_set_free(gfs_preamble_set* set) { delete set; }

size_t gfs_preamble_set_size(const gfs_preamble_set* set) {
  return set ? set->set.size() : 0;
}

int gfs_preamble_cross_correlation(const gfs_preamble_set* set, size_t a,
                                   size_t b, double* out) {
  return guarded([&] {
    if (!set || !out) throw gfs::InvalidArgument("null pointer argument");
    if (a >= set->set.size() || b >= set->set.size())
      throw gfs::InvalidArgument("preamble index out of range");
    *out = gfs::cross_correlation(set->set.preambles[a], set->set.preambles[b]);
  });
}

int gfs_codebook_set_load(const char* path, gfs_codebook_set** out) {
  return guarded([&] {
    if (!path || !out) throw gfs::InvalidArgument("null pointer argument");
    *out = new gfs_codebook_set{gfs::load_codebook_set(path)};
  });
}

void gfs_codebook_set_free(gfs_codebook_set* cbs) { delete cbs; }

int gfs_codebook_set_dims(const gfs_codebook_set* cbs, uint32_t* J,
                          uint32_t* K, uint32_t* N, uint32_t* M) {
  return guarded([&] {
    if (!cbs) throw gfs::InvalidArgument("null codebook set");
    if (J) *J = cbs->cbs.J();
    if (K) *K = cbs->cbs.K;
    if (N) *N = cbs->cbs.N;
    if (M) *M = cbs->cbs.M;
  });
}

int gfs_codebook_power(const gfs_codebook_set* cbs, uint32_t j, double* out) {
  return guarded([&] {
    if (!cbs || !out) throw gfs::InvalidArgument("null pointer argument");
    if (j >= cbs->cbs.J())
      throw gfs::InvalidArgument("codebook index out of range");
    *out = gfs::average_power(cbs->cbs.codebooks[j]);
  });
}

int gfs_ctu_map_build(const gfs_preamble_set* set, uint32_t J,
                      const char* assoc, uint64_t seed, gfs_ctu_map** out) {
  return guarded([&] {
    if (!set || !assoc || !out)
      throw gfs::InvalidArgument("null pointer argument");
    std::string scheme(assoc);
    gfs::CtuMap map;
    if (scheme == "random")
      map = gfs::random_association(set->set, J, seed);
    else if (scheme == "rs")
      map = gfs::root_separated_association(set->set, J);
    else
      throw gfs::InvalidArgument("unknown association scheme '" + scheme + "'");
    *out = new gfs_ctu_map{std::move(map)};
  });
}

int gfs_ctu_map_save(const gfs_ctu_map* map, const gfs_preamble_set* set,
                     const char* path) {
  return guarded([&] {
    if (!map || !set || !path)
      throw gfs::InvalidArgument("null pointer argument");
    gfs::save_ctu_csv(map->map, set->set, path);
  });
}

int gfs_ctu_map_load(const char* path, gfs_ctu_map** out) {
  return guarded([&] {
    if (!path || !out) throw gfs::InvalidArgument("null pointer argument");
    *out = new gfs_ctu_map{gfs::load_ctu_csv(path, nullptr)};
  });
}

void gfs_ctu_map_free(gfs_ctu_map* map) { delete map; }

uint32_t gfs_ctu_map_size(const gfs_ctu_map* map) {
  return map ? map->map.size() : 0;
}

int gfs_ctu_same_cb_correlation(const gfs_ctu_map* map,
                                const gfs_preamble_set* set, double* max_out,
                                double* mean_out) {
  return guarded([&] {
    if (!map || !set) throw gfs::InvalidArgument("null pointer argument");
    gfs::CorrelationStats stats =
        gfs::same_cb_correlation_stats(map->map, set->set);
    if (max_out) *max_out = stats.max;
    if (mean_out) *mean_out = stats.mean;
  });
}

int gfs_model_load(const char* checkpoint_path, gfs_model** out) {
  return guarded([&] {
    if (!checkpoint_path || !out)
      throw gfs::InvalidArgument("null pointer argument");
    *out = new gfs_model{gfs::load_checkpoint(checkpoint_path)};
  });
}

void gfs_model_free(gfs_model* model) { delete model; }

int gfs_model_param_counts(const gfs_model* model, size_t* uaen_out,
                           size_t* audn_out) {
  return guarded([&] {
    if (!model) throw gfs::InvalidArgument("null model");
    gfs::ParameterCounts counts =
        gfs::parameter_count(const_cast<gfs_model*>(model)->bundle);
    if (uaen_out) *uaen_out = counts.uaen;
    if (audn_out) *audn_out = counts.audn;
  });
}

int gfs_model_stage(const gfs_model* model, char* buf, size_t buf_len) {
  return guarded([&] {
    if (!model || !buf) throw gfs::InvalidArgument("null pointer argument");
    const std::string& stage = model->bundle.stage;
    if (buf_len <= stage.size())
      throw gfs::InvalidArgument("stage buffer too small");
    std::memcpy(buf, stage.c_str(), stage.size() + 1);
  });
}

int gfs_run_ctu_build(const char* options_json) {
  return guarded([&] {
    if (!options_json) throw gfs::InvalidArgument("null options");
    gfs::run_ctu_build(gfs::parse_ctu_build_options(options_json));
  });
}

int gfs_run_train(const char* options_json) {
  return guarded([&] {
    if (!options_json) throw gfs::InvalidArgument("null options");
    gfs::run_train(gfs::parse_train_options(options_json));
  });
}

int gfs_run_sweep(const char* options_json) {
  return guarded([&] {
    if (!options_json) throw gfs::InvalidArgument("null options");
    gfs::run_sweep(gfs::parse_sweep_options(options_json));
  });
}

int gfs_run_plot(const char* csv_in, const char* svg_out) {
  return guarded([&] {
    if (!csv_in || !svg_out) throw gfs::InvalidArgument("null pointer argument");
    gfs::PlotOptions o;
    o.in = csv_in;
    o.out = svg_out;
    gfs::run_plot(o);
  });
}

int gfs_run_verify(const char* suite, const char* report_path,
                   int* failures_out) {
  int failures = 0;
  int rc = guarded([&] {
    if (!suite) throw gfs::InvalidArgument("null suite");
    gfs::VerifyOptions o;
    o.suite = suite;
    if (report_path) o.out = report_path;
    gfs::run_verify(o, failures);
  });
  if (failures_out) *failures_out = failures;
  if (rc != GFS_OK) return rc;
  return failures == 0 ? GFS_OK
                       : set_error(GFS_ERR_RUNTIME,
                                   std::to_string(failures) +
                                       " verification check(s) failed");
}

int gfs_rerun(const char* manifest_path) {
  return guarded([&] {
    if (!manifest_path) throw gfs::InvalidArgument("null manifest path");
    gfs::rerun(manifest_path);
  });
}

}  // extern "C"
