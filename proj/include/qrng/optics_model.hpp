#pragma once

#include <optional>

namespace qrng::optics {

/// Component parameters of the two-arm interferometer and homodyne detector.
///
/// Losses are power losses in dB; the model works with amplitude
/// coefficients 10^(-dB/20). Gains convert optical power into detector
/// output voltage. Defaults are the measured values of the reference setup.
struct DeviceParams {
    double eta_ab1_db = 3.80;
    double eta_ab2_db = 3.56;
    double eta_pm_db = 3.24;
    double eta_c1d1_db = 3.68;
    double eta_c1d2_db = 3.82;
    double eta_c2d1_db = 3.76;
    double eta_c2d2_db = 3.60;
    double g_pd1 = 5.55e4;  // V/W
    double g_pd2 = 5.42e4;  // V/W
    double v_pi = 1.240;    // V
    double p_lo = 5.0;      // mW

    /// Throws ParameterError naming the first invalid field.
    void validate() const;

    /// Optical input power in watts; plays the role of |E_in|^2.
    double input_power_w() const noexcept { return p_lo * 1e-3; }
};

double db_to_amplitude(double loss_db);

/// Detector output decomposed as dc + interference * cos(delta_phi).
struct Photocurrent {
    double dc = 0.0;
    double interference = 0.0;

    double at(double delta_phi) const;
};

Photocurrent pd1_terms(const DeviceParams& params);
Photocurrent pd2_terms(const DeviceParams& params);

double pd1_current(const DeviceParams& params, double delta_phi);
double pd2_current(const DeviceParams& params, double delta_phi);

/// PD1 minus PD2, evaluated from the expanded bias/interference form.
double homodyne_difference(const DeviceParams& params, double delta_phi);

enum class Branch { principal, mirrored };

/// Phase difference that cancels the homodyne bias.
///
/// The principal branch lies in [0, pi]; the mirrored branch is its
/// reflection 2*pi - phi. Returns std::nullopt when the asymmetry is too
/// large for any phase to cancel (|cos| would exceed 1). A device whose
/// interference coefficient vanishes raises DegenerateDeviceError, unless
/// its bias vanishes as well, in which case every phase balances and pi/2
/// is returned.
std::optional<double> balance_phase(const DeviceParams& params,
                                    Branch branch = Branch::principal);

/// Cosine the balance phase must satisfy, -bias / interference.
double balance_cosine(const DeviceParams& params);

}  // namespace qrng::optics
