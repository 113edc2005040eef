/* emslab C ABI: on-board PHEV energy-management controllers and plant model. */

#ifndef EMSLAB_H
#define EMSLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum EmsStatus {
  EMS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  EMS_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  EMS_STATUS_UTF8 = 2,
  /**
   * File could not be read.
   */
  EMS_STATUS_IO = 3,
  /**
   * File contents failed to parse or validate.
   */
  EMS_STATUS_PARSE = 4,
  /**
   * Arguments outside the supported range.
   */
  EMS_STATUS_INVALID = 5,
} EmsStatus;

/**
 * Opaque supervisory controller with its causal history.
 */
typedef struct EmsController EmsController;

/**
 * Opaque powertrain parameter set.
 */
typedef struct EmsParams EmsParams;

/**
 * Opaque trained policy (the cloud-to-vehicle payload).
 */
typedef struct EmsPolicy EmsPolicy;

/**
 * Powertrain state plus the pending engine-start draw, carried by the
 * caller between steps.
 */
typedef struct EmsState {
  double soc;
  bool engine_on;
  /**
   * Seconds of HSG startup draw still pending (0 when idle).
   */
  double hsg_remaining_s;
} EmsState;

/**
 * Exogenous signals at the current control step.
 */
typedef struct EmsDisturbance {
  double aux_power_w;
  double wheel_torque_nm;
  double axle_speed_radps;
  /**
   * Gear number 1..=6.
   */
  uint8_t gear;
  double vehicle_speed_mps;
  /**
   * Distance along the route, meters.
   */
  double position_m;
} EmsDisturbance;

/**
 * Control input: engine torque command and engine switch.
 */
typedef struct EmsControl {
  double engine_torque_nm;
  bool engine_switch;
} EmsControl;

/**
 * Outputs of one plant step.
 */
typedef struct EmsPlantOutputs {
  struct EmsState next;
  double fuel_mass_kg;
  double fuel_power_w;
  double battery_power_w;
  double internal_power_w;
  double motor_torque_nm;
  double hsg_energy_j;
  /**
   * Set when the command violated a constraint and was clamped.
   */
  bool infeasible;
} EmsPlantOutputs;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ems_version(void);

/**
 * Human-readable description of a status code (static storage).
 */
const char *ems_status_message(enum EmsStatus status);

/**
 * Built-in synthetic powertrain calibration.
 */
enum EmsStatus ems_params_default(struct EmsParams **out);

/**
 * Load powertrain parameters from a TOML file.
 */
enum EmsStatus ems_params_load(const char *path, struct EmsParams **out);

/**
 * # Safety
 * `params` must come from `ems_params_default`/`ems_params_load` and not
 * have been freed already. Null is ignored.
 */
void ems_params_free(struct EmsParams *params);

/**
 * Load a trained policy file.
 */
enum EmsStatus ems_policy_load(const char *path, struct EmsPolicy **out);

/**
 * # Safety
 * `policy` must come from `ems_policy_load` and not have been freed
 * already. Null is ignored.
 */
void ems_policy_free(struct EmsPolicy *policy);

/**
 * MPC controller with the learned terminal value. The policy is copied
 * into the handle.
 *
 * # Safety
 * `params` and `policy` must be valid handles.
 */
enum EmsStatus ems_controller_new_mpc(const struct EmsParams *params,
                                      const struct EmsPolicy *policy,
                                      uint32_t torque_candidates,
                                      uint32_t horizon,
                                      struct EmsController **out);

/**
 * CD-CS baseline controller.
 *
 * # Safety
 * `params` must be a valid handle.
 */
enum EmsStatus ems_controller_new_cdcs(const struct EmsParams *params, struct EmsController **out);

/**
 * A-ECMS controller tracking the representative SOC profile loaded from
 * `profile_path`.
 *
 * # Safety
 * `params` must be a valid handle.
 */
enum EmsStatus ems_controller_new_aecms(const struct EmsParams *params,
                                        const char *profile_path,
                                        struct EmsController **out);

/**
 * # Safety
 * `controller` must come from a controller constructor and not have been
 * freed already. Null is ignored.
 */
void ems_controller_free(struct EmsController *controller);

/**
 * Compute the control for the current step. Call once per sample period,
 * then advance the plant (or the vehicle) with the returned control and
 * report the executed fuel mass via `ems_controller_commit`.
 *
 * # Safety
 * `controller` must be a valid handle; `out` must point to writable
 * memory.
 */
enum EmsStatus ems_controller_step(struct EmsController *controller,
                                   struct EmsState state,
                                   struct EmsDisturbance dist,
                                   struct EmsControl *out);

/**
 * Report the fuel mass actually burned while executing the last control,
 * keeping the controller's cumulative-fuel feature honest.
 *
 * # Safety
 * `controller` must be a valid handle.
 */
enum EmsStatus ems_controller_commit(struct EmsController *controller, double fuel_mass_kg);

/**
 * Advance the plant model one sample period. Infeasible commands are
 * clamped and flagged, never rejected.
 *
 * # Safety
 * `params` must be a valid handle; `out` must point to writable memory.
 */
enum EmsStatus ems_plant_step(const struct EmsParams *params,
                              struct EmsState state,
                              struct EmsControl control,
                              struct EmsDisturbance dist,
                              struct EmsPlantOutputs *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EMSLAB_H */
