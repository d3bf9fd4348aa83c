#include "qrng/optics_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qrng/errors.hpp"

namespace qrng::optics {

namespace {

void require_loss(double db, const char* name) {
    if (!(db >= 0.0) || !std::isfinite(db))
        throw ParameterError(std::string(name) + " must be a finite loss >= 0 dB");
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw ParameterError(std::string(name) + " must be > 0");
}

// Both photodiodes share this form; only the BS2 pair and gain differ.
Photocurrent detector_terms(const DeviceParams& p, double gain, double upper_db,
                            double lower_db) {
    const double ab1 = db_to_amplitude(p.eta_ab1_db);
    const double ab2 = db_to_amplitude(p.eta_ab2_db);
    const double pm = db_to_amplitude(p.eta_pm_db);
    const double up = db_to_amplitude(upper_db);
    const double lo = db_to_amplitude(lower_db);
    const double scale = gain * p.input_power_w();

    const double upper_arm = ab1 * up * pm;
    const double lower_arm = ab2 * lo;
    return {scale * (upper_arm * upper_arm + lower_arm * lower_arm),
            2.0 * scale * upper_arm * lower_arm};
}

}  // namespace

void DeviceParams::validate() const {
    require_loss(eta_ab1_db, "eta_ab1_db");
    require_loss(eta_ab2_db, "eta_ab2_db");
    require_loss(eta_pm_db, "eta_pm_db");
    require_loss(eta_c1d1_db, "eta_c1d1_db");
    require_loss(eta_c1d2_db, "eta_c1d2_db");
    require_loss(eta_c2d1_db, "eta_c2d1_db");
    require_loss(eta_c2d2_db, "eta_c2d2_db");
    require_positive(g_pd1, "g_pd1");
    require_positive(g_pd2, "g_pd2");
    require_positive(v_pi, "v_pi");
    if (!(p_lo >= 0.0) || !std::isfinite(p_lo))
        throw ParameterError("p_lo must be >= 0 mW");
}

double db_to_amplitude(double loss_db) {
    require_loss(loss_db, "loss_db");
    return std::pow(10.0, -loss_db / 20.0);
}

double Photocurrent::at(double delta_phi) const {
    return dc + interference * std::cos(delta_phi);
}

Photocurrent pd1_terms(const DeviceParams& params) {
    params.validate();
    return detector_terms(params, params.g_pd1, params.eta_c1d1_db, params.eta_c2d1_db);
}

Photocurrent pd2_terms(const DeviceParams& params) {
    params.validate();
    return detector_terms(params, params.g_pd2, params.eta_c1d2_db, params.eta_c2d2_db);
}

double pd1_current(const DeviceParams& params, double delta_phi) {
    return pd1_terms(params).at(delta_phi);
}

double pd2_current(const DeviceParams& params, double delta_phi) {
    return pd2_terms(params).at(delta_phi);
}

double homodyne_difference(const DeviceParams& params, double delta_phi) {
    const Photocurrent a = pd1_terms(params);
    const Photocurrent b = pd2_terms(params);
    return (a.dc - b.dc) + (a.interference - b.interference) * std::cos(delta_phi);
}

double balance_cosine(const DeviceParams& params) {
    const Photocurrent a = pd1_terms(params);
    const Photocurrent b = pd2_terms(params);
    const double bias = a.dc - b.dc;
    const double coupling = a.interference - b.interference;
    // Scale against the individual terms so the test is unit-free.
    const double scale = std::abs(a.dc) + std::abs(b.dc) + std::abs(a.interference) +
                         std::abs(b.interference);
    if (std::abs(coupling) <= 1e-15 * scale || scale == 0.0) {
        if (std::abs(bias) <= 1e-15 * scale || scale == 0.0) return 0.0;
        throw DegenerateDeviceError(
            "interference terms of both detectors cancel; phase cannot remove the bias");
    }
    return -bias / coupling;
}

std::optional<double> balance_phase(const DeviceParams& params, Branch branch) {
    const double c = balance_cosine(params);
    if (std::abs(c) > 1.0) return std::nullopt;
    const double phi = std::acos(c);
    if (branch == Branch::mirrored)
        return std::fmod(2.0 * std::numbers::pi - phi, 2.0 * std::numbers::pi);
    return phi;
}

}  // namespace qrng::optics
