#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "serl/digest.hpp"
#include "serl/matrix.hpp"
#include "serl/tensor.hpp"

namespace serl {

struct LayerDims {
    std::size_t in_dim = 2;
    std::size_t hidden = 16;
    std::size_t bottleneck = 8;
    std::size_t classes = 5;
};

// MLP feature extractor g: in -> hidden -> hidden -> bottleneck, relu
// between layers, linear bottleneck output. Weights are stored
// (in x out) so the forward pass is x . W + b.
struct FeatureExtractor {
    std::size_t in_dim = 0;
    std::size_t hidden = 0;
    std::size_t bottleneck = 0;
    std::vector<double> w1, b1;
    std::vector<double> w2, b2;
    std::vector<double> w3, b3;
};

// Bias-free linear classifier f with unit-norm weight rows; the rows
// double as class anchors. logits = z . C^T / temperature.
struct Classifier {
    std::size_t classes = 0;
    std::size_t dim = 0;
    std::vector<double> weights;  // classes x dim
    bool frozen = false;
    double temperature = 0.05;
};

std::pair<FeatureExtractor, Classifier> init_params(std::uint64_t seed, const LayerDims& dims,
                                                    double temperature = 0.05);

void normalize_classifier_rows(Classifier& cl);

// no-grad forward passes
Matrix extract_features(const FeatureExtractor& fe, const Matrix& x);
Matrix classify(const Classifier& cl, const Matrix& z);
ProbMatrix predict_probs(const FeatureExtractor& fe, const Classifier& cl, const Matrix& x);

AnchorSet anchors(const Classifier& cl);

ParamDigest freeze_classifier(Classifier& cl);
ParamDigest classifier_digest(const Classifier& cl);
ParamDigest model_digest(const FeatureExtractor& fe, const Classifier& cl);

// Binds the model parameters onto a tape for one training step. The
// classifier leaf never requires grad while frozen.
struct ModelBinding {
    ModelBinding(autodiff::Tape& tape, const FeatureExtractor& fe, const Classifier& cl,
                 bool train_extractor, bool train_classifier);

    autodiff::TensorPtr features(const autodiff::TensorPtr& x) const;
    autodiff::TensorPtr logits_from_features(const autodiff::TensorPtr& z) const;
    autodiff::TensorPtr logits(const autodiff::TensorPtr& x) const {
        return logits_from_features(features(x));
    }
    autodiff::TensorPtr probs(const autodiff::TensorPtr& x) const;

    autodiff::Tape* tape;
    autodiff::TensorPtr w1, b1, w2, b2, w3, b3;
    autodiff::TensorPtr cls;
    double temperature;
};

// versioned text checkpoint, documented in the README
void save_checkpoint(const std::string& path, const FeatureExtractor& fe, const Classifier& cl);
std::pair<FeatureExtractor, Classifier> load_checkpoint(const std::string& path);

}  // namespace serl
