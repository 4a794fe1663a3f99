#include "serl/model.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "serl/errors.hpp"
#include "serl/rng.hpp"

namespace serl {

using autodiff::Tape;
using autodiff::TensorPtr;

namespace {

void xavier_fill(Rng& rng, std::vector<double>& w, std::size_t fan_in, std::size_t fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& x : w) x = rng.uniform(-bound, bound);
}

}  // namespace

std::pair<FeatureExtractor, Classifier> init_params(std::uint64_t seed, const LayerDims& dims,
                                                    double temperature) {
    if (dims.in_dim == 0 || dims.hidden == 0 || dims.bottleneck == 0 || dims.classes == 0) {
        throw ConfigError("init_params: all layer dims must be >= 1");
    }
    Rng rng(Rng::fold(seed, 0x6d6f64656cULL));  // independent stream per purpose

    FeatureExtractor fe;
    fe.in_dim = dims.in_dim;
    fe.hidden = dims.hidden;
    fe.bottleneck = dims.bottleneck;
    fe.w1.resize(dims.in_dim * dims.hidden);
    fe.b1.assign(dims.hidden, 0.0);
    fe.w2.resize(dims.hidden * dims.hidden);
    fe.b2.assign(dims.hidden, 0.0);
    fe.w3.resize(dims.hidden * dims.bottleneck);
    fe.b3.assign(dims.bottleneck, 0.0);
    xavier_fill(rng, fe.w1, dims.in_dim, dims.hidden);
    xavier_fill(rng, fe.w2, dims.hidden, dims.hidden);
    xavier_fill(rng, fe.w3, dims.hidden, dims.bottleneck);

    Classifier cl;
    cl.classes = dims.classes;
    cl.dim = dims.bottleneck;
    cl.temperature = temperature;
    cl.weights.resize(dims.classes * dims.bottleneck);
    xavier_fill(rng, cl.weights, dims.bottleneck, dims.classes);
    normalize_classifier_rows(cl);
    return {std::move(fe), std::move(cl)};
}

void normalize_classifier_rows(Classifier& cl) {
    for (std::size_t i = 0; i < cl.classes; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cl.dim; ++j) {
            const double w = cl.weights[i * cl.dim + j];
            s += w * w;
        }
        const double n = std::sqrt(s);
        if (n > 0.0) {
            for (std::size_t j = 0; j < cl.dim; ++j) cl.weights[i * cl.dim + j] /= n;
        }
    }
}

ModelBinding::ModelBinding(Tape& t, const FeatureExtractor& fe, const Classifier& cl,
                           bool train_extractor, bool train_classifier)
    : tape(&t), temperature(cl.temperature) {
    w1 = t.leaf(fe.in_dim, fe.hidden, fe.w1, train_extractor);
    b1 = t.leaf(1, fe.hidden, fe.b1, train_extractor);
    w2 = t.leaf(fe.hidden, fe.hidden, fe.w2, train_extractor);
    b2 = t.leaf(1, fe.hidden, fe.b2, train_extractor);
    w3 = t.leaf(fe.hidden, fe.bottleneck, fe.w3, train_extractor);
    b3 = t.leaf(1, fe.bottleneck, fe.b3, train_extractor);
    cls = t.leaf(cl.classes, cl.dim, cl.weights, train_classifier && !cl.frozen);
}

TensorPtr ModelBinding::features(const TensorPtr& x) const {
    if (x->cols != w1->rows) {
        throw DimensionError("extract_features: input width " + std::to_string(x->cols) +
                             " does not match in_dim " + std::to_string(w1->rows));
    }
    auto& t = *tape;
    auto h1 = autodiff::relu(t, autodiff::add_rowvec(t, autodiff::matmul(t, x, w1), b1));
    auto h2 = autodiff::relu(t, autodiff::add_rowvec(t, autodiff::matmul(t, h1, w2), b2));
    return autodiff::add_rowvec(t, autodiff::matmul(t, h2, w3), b3);
}

TensorPtr ModelBinding::logits_from_features(const TensorPtr& z) const {
    if (z->cols != cls->cols) {
        throw DimensionError("classify: feature width " + std::to_string(z->cols) +
                             " does not match classifier dim " + std::to_string(cls->cols));
    }
    auto& t = *tape;
    return autodiff::scale(t, autodiff::matmul(t, z, autodiff::transpose(t, cls)),
                           1.0 / temperature);
}

TensorPtr ModelBinding::probs(const TensorPtr& x) const {
    return autodiff::softmax_rows(*tape, logits(x));
}

namespace {
Matrix to_matrix(const TensorPtr& t) {
    return Matrix(t->rows, t->cols, t->data);
}
}  // namespace

Matrix extract_features(const FeatureExtractor& fe, const Matrix& x) {
    Tape tape;
    Classifier dummy;
    dummy.classes = 1;
    dummy.dim = fe.bottleneck;
    dummy.weights.assign(fe.bottleneck, 0.0);
    ModelBinding bind(tape, fe, dummy, false, false);
    auto xs = tape.constant(x.rows, x.cols, x.v);
    return to_matrix(bind.features(xs));
}

Matrix classify(const Classifier& cl, const Matrix& z) {
    if (z.cols != cl.dim) {
        throw DimensionError("classify: feature width " + std::to_string(z.cols) +
                             " does not match classifier dim " + std::to_string(cl.dim));
    }
    Matrix out(z.rows, cl.classes);
    for (std::size_t i = 0; i < z.rows; ++i) {
        for (std::size_t k = 0; k < cl.classes; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cl.dim; ++j) {
                acc += z.at(i, j) * cl.weights[k * cl.dim + j];
            }
            out.at(i, k) = acc / cl.temperature;
        }
    }
    return out;
}

ProbMatrix predict_probs(const FeatureExtractor& fe, const Classifier& cl, const Matrix& x) {
    Tape tape;
    ModelBinding bind(tape, fe, cl, false, false);
    auto xs = tape.constant(x.rows, x.cols, x.v);
    return to_matrix(bind.probs(xs));
}

AnchorSet anchors(const Classifier& cl) {
    return AnchorSet(cl.classes, cl.dim, cl.weights);
}

ParamDigest classifier_digest(const Classifier& cl) {
    return ParamDigest::of({&cl.weights});
}

ParamDigest freeze_classifier(Classifier& cl) {
    cl.frozen = true;
    return classifier_digest(cl);
}

ParamDigest model_digest(const FeatureExtractor& fe, const Classifier& cl) {
    return ParamDigest::of({&fe.w1, &fe.b1, &fe.w2, &fe.b2, &fe.w3, &fe.b3, &cl.weights});
}

// --- checkpoint io --------------------------------------------------------

namespace {

void write_array(std::ostream& os, const char* name, std::size_t rows, std::size_t cols,
                 const std::vector<double>& v) {
    os << "array " << name << ' ' << rows << ' ' << cols << '\n';
    os << std::setprecision(17);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (j) os << ' ';
            os << v[i * cols + j];
        }
        os << '\n';
    }
}

std::vector<double> read_array(std::istream& is, const std::string& expect_name,
                               std::size_t& rows, std::size_t& cols) {
    std::string word, name;
    if (!(is >> word >> name >> rows >> cols) || word != "array" || name != expect_name) {
        throw ParseError("checkpoint: expected array " + expect_name);
    }
    std::vector<double> v(rows * cols);
    for (auto& x : v) {
        if (!(is >> x)) throw ParseError("checkpoint: truncated array " + expect_name);
    }
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const FeatureExtractor& fe, const Classifier& cl) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write checkpoint: " + path);
    os << "serl-checkpoint v1\n";
    os << "dims " << fe.in_dim << ' ' << fe.hidden << ' ' << fe.bottleneck << ' ' << cl.classes
       << '\n';
    os << "temperature " << std::setprecision(17) << cl.temperature << '\n';
    os << "frozen " << (cl.frozen ? 1 : 0) << '\n';
    write_array(os, "w1", fe.in_dim, fe.hidden, fe.w1);
    write_array(os, "b1", 1, fe.hidden, fe.b1);
    write_array(os, "w2", fe.hidden, fe.hidden, fe.w2);
    write_array(os, "b2", 1, fe.hidden, fe.b2);
    write_array(os, "w3", fe.hidden, fe.bottleneck, fe.w3);
    write_array(os, "b3", 1, fe.bottleneck, fe.b3);
    write_array(os, "classifier", cl.classes, cl.dim, cl.weights);
    os << "end\n";
}

std::pair<FeatureExtractor, Classifier> load_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot read checkpoint: " + path);
    std::string magic, version;
    is >> magic >> version;
    if (magic != "serl-checkpoint" || version != "v1") {
        throw ParseError("checkpoint: unsupported header in " + path);
    }
    std::string word;
    FeatureExtractor fe;
    Classifier cl;
    std::size_t classes = 0;
    if (!(is >> word >> fe.in_dim >> fe.hidden >> fe.bottleneck >> classes) || word != "dims") {
        throw ParseError("checkpoint: missing dims");
    }
    if (!(is >> word >> cl.temperature) || word != "temperature") {
        throw ParseError("checkpoint: missing temperature");
    }
    int frozen = 0;
    if (!(is >> word >> frozen) || word != "frozen") {
        throw ParseError("checkpoint: missing frozen flag");
    }
    cl.frozen = frozen != 0;
    cl.classes = classes;
    cl.dim = fe.bottleneck;
    std::size_t r = 0, c = 0;
    fe.w1 = read_array(is, "w1", r, c);
    fe.b1 = read_array(is, "b1", r, c);
    fe.w2 = read_array(is, "w2", r, c);
    fe.b2 = read_array(is, "b2", r, c);
    fe.w3 = read_array(is, "w3", r, c);
    fe.b3 = read_array(is, "b3", r, c);
    cl.weights = read_array(is, "classifier", r, c);
    if (r != cl.classes || c != cl.dim) {
        throw ParseError("checkpoint: classifier shape mismatch");
    }
    return {std::move(fe), std::move(cl)};
}

}  // namespace serl
