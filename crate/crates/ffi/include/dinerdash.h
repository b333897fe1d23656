#ifndef DINERDASH_H
#define DINERDASH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DD_NUM_ACTIONS 57

#define DD_STATE_DIM 40

typedef enum DdStatus {
  DD_STATUS_OK = 0,
  DD_STATUS_NULL_POINTER = 1,
  DD_STATUS_INVALID_ARGUMENT = 2,
  DD_STATUS_INVALID_CONFIG = 3,
  DD_STATUS_ACTION_OUT_OF_RANGE = 4,
  DD_STATUS_EPISODE_DONE = 5,
  DD_STATUS_NOT_RESET = 6,
  DD_STATUS_IO = 7,
  DD_STATUS_PARSE = 8,
  DD_STATUS_DATA = 9,
  DD_STATUS_PANIC = 10,
} DdStatus;

/**
 * An environment instance.
 */
typedef struct DdEnv DdEnv;

/**
 * A loaded policy with its own action-sampling stream.
 */
typedef struct DdPolicy DdPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or an empty string. Valid until the next call into
 * this library from the same thread.
 */
const char *dd_last_error(void);

/**
 * Create an environment. `config_toml` is the text of a TOML config or NULL for the
 * default (hard) preset. The environment must be reset before stepping.
 *
 * # Safety
 * `config_toml` must be NULL or a NUL-terminated string; `out` must be a valid pointer.
 */
enum DdStatus dd_env_new(const char *config_toml, uint64_t seed, struct DdEnv **out);

/**
 * # Safety
 * `env` must be NULL or a handle from [`dd_env_new`] that has not been freed.
 */
void dd_env_free(struct DdEnv *env);

/**
 * Start a new episode with `seed`, writing the 40 state values to `state_out` (may be NULL).
 *
 * # Safety
 * `env` must be a live handle; `state_out` must be NULL or point to 40 doubles.
 */
enum DdStatus dd_env_reset(struct DdEnv *env, uint64_t seed, double *state_out);

/**
 * Apply action `action` (0..=56). Any output pointer may be NULL.
 *
 * # Safety
 * `env` must be a live handle; `state_out` must be NULL or point to 40 doubles; the
 * other outputs must be NULL or valid.
 */
enum DdStatus dd_env_step(struct DdEnv *env,
                          int64_t action,
                          double *state_out,
                          double *reward_out,
                          bool *done_out);

/**
 * Current encoded state.
 *
 * # Safety
 * `env` must be a live handle; `state_out` must point to 40 doubles.
 */
enum DdStatus dd_env_state(const struct DdEnv *env, double *state_out);

/**
 * Legality mask: `mask_out[k]` is 1 when action k would not be penalized as illegal.
 *
 * # Safety
 * `env` must be a live handle; `mask_out` must point to 57 bytes.
 */
enum DdStatus dd_env_legal_actions(const struct DdEnv *env, uint8_t *mask_out);

/**
 * Text rendering of the restaurant. Release the string with [`dd_string_free`].
 *
 * # Safety
 * `env` must be a live handle; `out` must be a valid pointer.
 */
enum DdStatus dd_env_render(const struct DdEnv *env, char **out);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library that has not been freed.
 */
void dd_string_free(char *s);

/**
 * The scripted expert's action for the current state.
 *
 * # Safety
 * `env` must be a live handle; `action_out` must be a valid pointer.
 */
enum DdStatus dd_expert_action(const struct DdEnv *env, uint32_t *action_out);

/**
 * Load a policy: `"expert"`, `"random"`, or the path of a saved checkpoint. `seed`
 * drives stochastic policies.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum DdStatus dd_policy_load(const char *spec, uint64_t seed, struct DdPolicy **out);

/**
 * # Safety
 * `policy` must be NULL or a handle from [`dd_policy_load`] that has not been freed.
 */
void dd_policy_free(struct DdPolicy *policy);

/**
 * The policy's action for the environment's current state.
 *
 * # Safety
 * `policy` and `env` must be live handles; `action_out` must be a valid pointer.
 */
enum DdStatus dd_policy_act(struct DdPolicy *policy, const struct DdEnv *env, uint32_t *action_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DINERDASH_H */
