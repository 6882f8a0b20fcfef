#ifndef NULLCOLLAPSE_H
#define NULLCOLLAPSE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum NcStatus {
  NC_STATUS_OK = 0,
  NC_STATUS_NULL_POINTER = 1,
  NC_STATUS_INVALID_UTF8 = 2,
  NC_STATUS_CONFIG = 3,
  NC_STATUS_GUARDRAIL = 4,
  NC_STATUS_PRECONDITION = 5,
  NC_STATUS_RECORD = 6,
  NC_STATUS_NUMERIC = 7,
  NC_STATUS_OUT_OF_RANGE = 8,
  NC_STATUS_IO = 9,
  NC_STATUS_PANIC = 10,
} NcStatus;

/**
 * A validated run configuration.
 */
typedef struct NcConfig NcConfig;

/**
 * An exact outcome distribution over a set of vertices.
 */
typedef struct NcDistribution NcDistribution;

/**
 * The record of one run.
 */
typedef struct NcRecord NcRecord;

/**
 * One event of a record. Fields that do not apply are zero, with the
 * `realized` and `has_norms` flags telling which ones are meaningful.
 */
typedef struct NcEvent {
  size_t ordinal;
  size_t slot_first;
  size_t slot_second;
  uint32_t pair_ordinal;
  bool realized;
  uint8_t alpha_l;
  uint8_t alpha_r;
  bool has_norms;
  double norm_l;
  double norm_r;
} NcEvent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buffer` (at most
 * `capacity` bytes including the terminator) and returns the full message
 * length plus one. Returns 0 when no error has been recorded.
 *
 * # Safety
 * `buffer` must be null or valid for `capacity` bytes.
 */
size_t nc_last_error(char *buffer, size_t capacity);

/**
 * Parses a TOML configuration.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` valid for writes.
 */
enum NcStatus nc_config_from_toml(const char *toml, struct NcConfig **out);

/**
 * Replaces the seed of a configuration.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum NcStatus nc_config_set_seed(struct NcConfig *config, uint64_t seed);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void nc_config_free(struct NcConfig *config);

/**
 * Runs the configured dynamics.
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
enum NcStatus nc_run(const struct NcConfig *config, struct NcRecord **out);

/**
 * # Safety
 * `record` must be a live handle and `out` valid for writes.
 */
enum NcStatus nc_record_event_count(const struct NcRecord *record, size_t *out);

/**
 * # Safety
 * `record` must be a live handle and `out` valid for writes.
 */
enum NcStatus nc_record_event(const struct NcRecord *record, size_t index, struct NcEvent *out);

/**
 * Serializes a record to its text form.
 *
 * # Safety
 * `record` must be a live handle and `out` valid for writes.
 */
enum NcStatus nc_record_to_string(const struct NcRecord *record, char **out);

/**
 * Parses and validates a record in text form.
 *
 * # Safety
 * `text_form` must be a NUL-terminated string and `out` valid for writes.
 */
enum NcStatus nc_record_from_string(const char *text_form, struct NcRecord **out);

/**
 * Re-runs a record's configuration and checks that it is reproduced.
 *
 * # Safety
 * `record` must be a live handle.
 */
enum NcStatus nc_record_replay(const struct NcRecord *record);

/**
 * # Safety
 * `record` must be null or a handle not yet freed.
 */
void nc_record_free(struct NcRecord *record);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void nc_string_free(char *s);

/**
 * Exact distribution of every vertex swept by the configuration.
 *
 * # Safety
 * `config` must be a live handle and `out` valid for writes.
 */
enum NcStatus nc_oracle_distribution(const struct NcConfig *config, struct NcDistribution **out);

/**
 * Number of atoms, `4^vertices`.
 *
 * # Safety
 * `dist` must be a live handle and `out` valid for writes.
 */
enum NcStatus nc_distribution_len(const struct NcDistribution *dist, size_t *out);

/**
 * Probability of atom `index`. Atoms are numbered in base 4 with the
 * lowest vertex ordinal as the most significant digit and each digit
 * equal to `2·α_L + α_R`.
 *
 * # Safety
 * `dist` must be a live handle and `out` valid for writes.
 */
enum NcStatus nc_distribution_probability(const struct NcDistribution *dist,
                                          size_t index,
                                          double *out);

/**
 * # Safety
 * `dist` must be null or a handle not yet freed.
 */
void nc_distribution_free(struct NcDistribution *dist);

/**
 * Jump factor for link value `alpha` and realized value `alpha_hat`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum NcStatus nc_jump_factor(double x, uint8_t alpha, uint8_t alpha_hat, double *out);

/**
 * Probabilities of the four outcomes of a vertex event on the pair
 * `(first_slot, first_slot + 1 mod slots)`, written to `out[0..4]`.
 * `amplitudes` holds `2^slots` complex numbers as interleaved `(re, im)`.
 *
 * # Safety
 * `amplitudes` must be valid for `2 · 2^slots` reads and `out` for 4 writes.
 */
enum NcStatus nc_vertex_jump_distribution(size_t slots,
                                          const double *amplitudes,
                                          size_t first_slot,
                                          double x,
                                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NULLCOLLAPSE_H */
