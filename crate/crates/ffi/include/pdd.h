/* C interface to the pdd name-translation scorer.
 *
 * Conventions:
 *   - Every function returns a PddStatus; out-parameters are written only
 *     on PDD_OK.
 *   - Handles from pdd_table_load must be released with pdd_table_free;
 *     strings from pdd_normalize_icd9 with pdd_string_free.
 *   - pdd_last_error_message() describes the most recent failure on the
 *     calling thread; the pointer is valid until the next pdd_* call on
 *     that thread and must not be freed.
 *
 * Kept in sync with the Rust definitions by hand; the round-trip smoke
 * test compiles a C consumer against this header.
 */

#ifndef PDD_H
#define PDD_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct PddTable PddTable;

typedef enum PddStatus {
  PDD_OK = 0,
  PDD_NULL_ARGUMENT = 1,
  PDD_INVALID_UTF8 = 2,
  PDD_IO = 3,
  PDD_PARSE = 4,
  PDD_INVALID_INPUT = 5,
  PDD_INTERNAL = 6
} PddStatus;

/* Most recent error message on this thread, or NULL after a success. */
const char *pdd_last_error_message(void);

/* Loads a trained table file (JSON) into *out_table. */
PddStatus pdd_table_load(const char *path, PddTable **out_table);

/* Releases a table handle. NULL is a no-op. */
void pdd_table_free(PddTable *table);

/* Writes the number of (source, target) entries to *out_count. */
PddStatus pdd_table_entry_count(const PddTable *table, size_t *out_count);

/* Scores how plausibly `mention` denotes the entity named `candidate`;
 * writes a probability in [0, epsilon] to *out_score. Names are
 * tokenized exactly as during training. */
PddStatus pdd_score(const PddTable *table, const char *mention,
                    const char *candidate, double epsilon,
                    double *out_score);

/* Normalizes a diagnosis code (trim, strip dots, uppercase) into a newly
 * allocated string at *out_code. */
PddStatus pdd_normalize_icd9(const char *code, char **out_code);

/* Releases a string allocated by this library. NULL is a no-op. */
void pdd_string_free(char *s);

#ifdef __cplusplus
}
#endif

#endif /* PDD_H */
