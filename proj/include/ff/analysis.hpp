#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "ff/common.hpp"
#include "ff/model.hpp"
#include "ff/parallel.hpp"
#include "ff/pipeline.hpp"

namespace ff {

// One time-averaged encoder embedding per fixed-length segment.
struct EmbeddingCloud {
    Eigen::MatrixXd vectors;  // s x d_h
    std::string electrode_id;

    void validate() const {
        require(vectors.rows() >= 2, "embedding cloud: need at least two segments");
        require(vectors.allFinite(), "embedding cloud: non-finite vectors");
    }
};

struct IdReport {
    std::map<std::string, int> intrinsic_dim;
    std::map<std::string, std::vector<double>> explained_variance;
    std::map<std::string, int> n_segments;
};

// Preprocess, transform, z-score, encode and time-average every 5 s segment
// of every interior electrode.
template <typename T>
std::map<std::string, EmbeddingCloud> embed_corpus(const Recording& rec,
                                                   const BrainBertParams<T>& params,
                                                   const PipelineConfig& cfg) {
    Recording pre = preprocess_recording(rec, cfg);
    std::vector<std::string> ids;
    for (const auto& [id, tr] : pre.traces) ids.push_back(id);
    std::vector<EmbeddingCloud> clouds(ids.size());
    parallel_for(static_cast<int>(ids.size()), [&](int i) {
        const auto& id = ids[static_cast<size_t>(i)];
        auto segs = segment_transform_zscore(pre.traces.at(id), cfg);
        require(segs.size() >= 2, "embed_corpus: recording too short for two segments");
        EmbeddingCloud cloud;
        cloud.electrode_id = id;
        cloud.vectors.resize(static_cast<long>(segs.size()), params.cfg.d_h);
        auto pv = ParamVars<T>::from(params, false);
        for (size_t s = 0; s < segs.size(); ++s) {
            ad::Mat<T> spec = segs[s].values.cast<T>();
            auto emb = encode<T>(spec, pv, params.cfg);
            cloud.vectors.row(static_cast<long>(s)) =
                emb.val().colwise().mean().template cast<double>();
        }
        clouds[static_cast<size_t>(i)] = std::move(cloud);
    });
    std::map<std::string, EmbeddingCloud> out;
    for (size_t i = 0; i < ids.size(); ++i) out[ids[i]] = std::move(clouds[i]);
    return out;
}

// Per-component explained-variance ratios of the centered cloud, via SVD.
// Component count is truncated to min(n_components, d, s - 1).
inline std::vector<double> pca_explained_variance(const EmbeddingCloud& cloud,
                                                  int n_components = 200) {
    cloud.validate();
    require(n_components >= 1, "pca: need at least one component");
    Eigen::MatrixXd centered = cloud.vectors.rowwise() - cloud.vectors.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
    Eigen::VectorXd sv = svd.singularValues();
    double total = sv.array().square().sum();
    if (total <= 0.0) throw input_error("pca: degenerate cloud with zero variance");
    long keep = std::min<long>({static_cast<long>(n_components), cloud.vectors.cols(),
                                cloud.vectors.rows() - 1});
    std::vector<double> out(static_cast<size_t>(keep), 0.0);
    for (long i = 0; i < keep && i < sv.size(); ++i)
        out[static_cast<size_t>(i)] = sv(i) * sv(i) / total;
    return out;
}

// Smallest d with cumulative ratio strictly above beta; returns the component
// count when the threshold is never crossed.
inline int intrinsic_dimension(const std::vector<double>& ratios, double beta = 0.95) {
    require(!ratios.empty(), "intrinsic_dimension: empty ratio vector");
    require(beta >= 0.0 && beta < 1.0 + 1e-12, "intrinsic_dimension: beta must lie in [0, 1]");
    double cum = 0.0;
    for (size_t i = 0; i < ratios.size(); ++i) {
        require(ratios[i] >= 0.0, "intrinsic_dimension: negative ratio");
        cum += ratios[i];
        if (cum > beta) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(ratios.size());
}

template <typename T>
IdReport intrinsic_dimension_report(const Recording& rec, const BrainBertParams<T>& params,
                                    const PipelineConfig& cfg, int n_components = 200,
                                    double beta = 0.95) {
    IdReport report;
    for (const auto& [id, cloud] : embed_corpus(rec, params, cfg)) {
        auto ratios = pca_explained_variance(cloud, n_components);
        report.intrinsic_dim[id] = intrinsic_dimension(ratios, beta);
        report.explained_variance[id] = std::move(ratios);
        report.n_segments[id] = static_cast<int>(cloud.vectors.rows());
    }
    return report;
}

}  // namespace ff
