#ifndef PRIMALITY_H
#define PRIMALITY_H

/* Generated by cbindgen from the primality-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Outcome of a library call.
 */
typedef enum PrimStatus {
  /*
   The call succeeded.
   */
  PRIM_OK = 0,
  /*
   A pointer was null or a parameter was out of domain.
   */
  PRIM_INVALID_ARGUMENT = 1,
  /*
   The input string was not a decimal number or a certificate.
   */
  PRIM_PARSE_ERROR = 2,
  /*
   The prover exhausted its budget without settling the input.
   */
  PRIM_PROVER_FAILED = 3,
  /*
   The certificate is well-formed but its claim does not check out.
   */
  PRIM_VERIFY_FAILED = 4,
  /*
   An internal invariant failed; the detail message has more.
   */
  PRIM_INTERNAL_ERROR = 5,
} PrimStatus;

/*
 Primality verdict for a tested or proven number.
 */
typedef enum PrimVerdict {
  /*
   The number is composite.
   */
  PRIM_COMPOSITE = 0,
  /*
   The number passed a randomized screen; no proof is attached.
   */
  PRIM_PROBABLE_PRIME = 1,
  /*
   The number is prime, with a proof or deterministic test behind it.
   */
  PRIM_PRIME = 2,
} PrimVerdict;

/*
 An opaque primality certificate, produced by [`prim_prove`] or
 [`prim_cert_parse`] and released with [`prim_cert_free`].
 */
typedef struct PrimCert PrimCert;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 The detail message for the most recent failure on this thread.  The
 pointer stays valid until the next library call on the same thread.
 */
const char *prim_last_error(void);

/*
 Tests `n_decimal` for primality and writes the verdict to `out_verdict`.

 Numbers below `2^64` get the deterministic strong-pseudoprime sweep, so
 their `PrimPrime`/`PrimComposite` verdicts are unconditional; larger
 numbers get `rounds` randomized strong tests seeded by `seed` and report
 `PrimProbablePrime` on survival.

 # Safety
 `n_decimal` must be a valid NUL-terminated string; `out_verdict` must be
 a valid pointer.
 */
enum PrimStatus prim_test(const char *n_decimal,
                          uint32_t rounds,
                          uint64_t seed,
                          enum PrimVerdict *out_verdict);

/*
 Proves or disproves the primality of `n_decimal` with the certifying
 chain prover.  On a prime, `*out_verdict` is `PrimPrime` and `*out_cert`
 owns the certificate; on a composite, `*out_verdict` is `PrimComposite`
 and `*out_cert` is null.  `PrimProverFailed` means the search budget ran
 out with no verdict.

 # Safety
 `n_decimal` must be a valid NUL-terminated string; `out_verdict` and
 `out_cert` must be valid pointers.
 */
enum PrimStatus prim_prove(const char *n_decimal,
                           uint64_t seed,
                           enum PrimVerdict *out_verdict,
                           struct PrimCert **out_cert);

/*
 Re-checks a certificate from first principles.

 # Safety
 `cert` must be a pointer from this library, or null.
 */
enum PrimStatus prim_cert_verify(const struct PrimCert *cert);

/*
 The subject of a certificate as a fresh decimal string; free it with
 [`prim_string_free`].  Returns null on a null handle.

 # Safety
 `cert` must be a pointer from this library, or null.
 */
char *prim_cert_subject(const struct PrimCert *cert);

/*
 Renders a certificate in its canonical text encoding; free the string
 with [`prim_string_free`].  Returns null on a null handle.

 # Safety
 `cert` must be a pointer from this library, or null.
 */
char *prim_cert_to_text(const struct PrimCert *cert);

/*
 Parses the canonical text encoding back into a certificate handle.
 Parsing is structural; call [`prim_cert_verify`] to check the claim.

 # Safety
 `text` must be a valid NUL-terminated string; `out_cert` must be a valid
 pointer.
 */
enum PrimStatus prim_cert_parse(const char *text, struct PrimCert **out_cert);

/*
 Releases a certificate handle.  Null is a no-op.

 # Safety
 `cert` must be a pointer from this library that has not been freed, or
 null.
 */
void prim_cert_free(struct PrimCert *cert);

/*
 Releases a string returned by this library.  Null is a no-op.

 # Safety
 `text` must be a string pointer from this library that has not been
 freed, or null.
 */
void prim_string_free(char *text);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PRIMALITY_H */
