#include "immsbm/model.hpp"

#include <cmath>

#include <json.hpp>

#include "immsbm/errors.hpp"
#include "immsbm/io.hpp"
#include "immsbm/kernels.hpp"

namespace immsbm {

std::vector<double> ImmsbmModel::predict_pair(EntityId i, EntityId j) const {
    const std::size_t O = num_outputs();
    if (i >= num_inputs() || j >= num_inputs())
        throw DataError("predict_pair: input id out of range");
    const auto& k = kern::active();
    std::vector<double> out(O, 0.0);
    const double* ti = theta_row(i);
    const double* tj = theta_row(j);
    for (std::size_t a = 0; a < T; ++a) {
        if (ti[a] == 0.0) continue;
        for (std::size_t b = 0; b < T; ++b) {
            double w = ti[a] * tj[b];
            if (w == 0.0) continue;
            k.axpy(w, p_fiber(a, b), out.data(), O);
        }
    }
    return out;
}

double ImmsbmModel::virality(EntityId i, EntityId x) const {
    if (x >= num_outputs()) throw DataError("virality: output id out of range");
    return predict_pair(i, i)[x];
}

void ImmsbmModel::symmetrize_p() {
    const std::size_t O = num_outputs();
    for (std::size_t a = 0; a < T; ++a) {
        for (std::size_t b = a + 1; b < T; ++b) {
            double* f1 = p_fiber(a, b);
            double* f2 = p_fiber(b, a);
            for (std::size_t x = 0; x < O; ++x) {
                double m = 0.5 * (f1[x] + f2[x]);
                f1[x] = m;
                f2[x] = m;
            }
        }
    }
}

void ImmsbmModel::validate() const {
    const std::size_t I = num_inputs(), O = num_outputs();
    if (theta.size() != I * T || p.size() != T * T * O)
        throw NumericError("model dimensions inconsistent");
    const auto& k = kern::active();
    for (std::size_t i = 0; i < I; ++i) {
        const double* row = theta_row(static_cast<EntityId>(i));
        for (std::size_t t = 0; t < T; ++t)
            if (!(row[t] >= 0.0)) throw NumericError("negative theta entry");
        if (std::abs(k.sum(row, T) - 1.0) > kSimplexTol)
            throw NumericError("theta row " + std::to_string(i) + " not a simplex");
    }
    for (std::size_t a = 0; a < T; ++a) {
        for (std::size_t b = 0; b < T; ++b) {
            const double* f = p_fiber(a, b);
            const double* g = p_fiber(b, a);
            for (std::size_t x = 0; x < O; ++x) {
                if (!(f[x] >= 0.0)) throw NumericError("negative p entry");
                if (std::abs(f[x] - g[x]) > kSimplexTol)
                    throw NumericError("p symmetry broken");
            }
            if (std::abs(k.sum(f, O) - 1.0) > kSimplexTol)
                throw NumericError("p fiber not a simplex");
        }
    }
}

std::vector<double> p_by_output(const ImmsbmModel& model) {
    const std::size_t T = model.T, O = model.num_outputs();
    std::vector<double> out(O * T * T);
    for (std::size_t a = 0; a < T; ++a)
        for (std::size_t b = 0; b < T; ++b) {
            const double* f = model.p_fiber(a, b);
            for (std::size_t x = 0; x < O; ++x) out[(x * T + a) * T + b] = f[x];
        }
    return out;
}

double log_likelihood(const ImmsbmModel& model, const TripletDataset& data) {
    if (model.vocab.num_inputs() != data.vocab().num_inputs() ||
        model.vocab.num_outputs() != data.vocab().num_outputs())
        throw DataError("log_likelihood: model/data dimension mismatch");
    const std::size_t T = model.T;
    const auto& k = kern::active();
    const std::vector<double> by_x = p_by_output(model);
    double ll = 0.0;
    for (const auto& t : data.items()) {
        const double* slice = by_x.data() + t.x * T * T;
        const double* ti = model.theta_row(t.i);
        const double* tj = model.theta_row(t.j);
        double prob = 0.0;
        for (std::size_t a = 0; a < T; ++a)
            prob += ti[a] * k.dot(slice + a * T, tj, T);
        ll += static_cast<double>(t.count) * std::log(std::max(prob, kLogFloor));
    }
    if (!std::isfinite(ll)) throw NumericError("log-likelihood not finite");
    return ll;
}

namespace {

nlohmann::json model_header(const std::string& kind, std::size_t T,
                            const Vocabulary& vocab) {
    return nlohmann::json{{"format_version", 1},
                          {"model_kind", kind},
                          {"T", T},
                          {"input_labels", vocab.input_labels()},
                          {"output_labels", vocab.output_labels()}};
}

} // namespace

void save_model(const ImmsbmModel& model, const std::filesystem::path& path) {
    nlohmann::json j = model_header("immsbm", model.T, model.vocab);
    j["theta"] = model.theta;
    j["p"] = model.p;
    atomic_write(path, j.dump() + "\n");
}

std::string model_kind(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.contains("model_kind"))
        throw DataError("not a model file: " + path.string());
    return j.at("model_kind").get<std::string>();
}

ImmsbmModel load_immsbm(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw DataError("malformed model JSON: " + path.string());
    if (j.value("model_kind", "") != "immsbm")
        throw DataError("expected model_kind immsbm in " + path.string());
    if (j.value("format_version", 0) != 1)
        throw DataError("unsupported model format_version in " + path.string());
    ImmsbmModel m;
    m.T = j.at("T").get<std::size_t>();
    m.vocab = Vocabulary::from_labels(
        j.at("input_labels").get<std::vector<std::string>>(),
        j.at("output_labels").get<std::vector<std::string>>());
    m.theta = j.at("theta").get<std::vector<double>>();
    m.p = j.at("p").get<std::vector<double>>();
    m.validate();
    return m;
}

} // namespace immsbm
