//! C ABI for the primality crate.
//!
//! Numbers cross the boundary as decimal NUL-terminated strings, proofs as
//! opaque [`PrimCert`] handles, and outcomes as [`PrimStatus`] codes with a
//! per-thread detail message behind [`prim_last_error`].  Every entry point
//! catches panics, so misuse degrades to an error code instead of unwinding
//! across the boundary.
//!
//! Ownership rules: strings returned by this library are freed with
//! [`prim_string_free`], certificates with [`prim_cert_free`].  The pointer
//! from [`prim_last_error`] borrows thread-local storage and is only valid
//! until the next call into the library on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use primality::cert::{self, Certificate};
use primality::ecpp::{ecpp_prove, EcppConfig, EcppOutcome};
use primality::fermat::{miller_grh, miller_rabin, Verdict};

/// Outcome of a library call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PrimStatus {
    /// The call succeeded.
    PrimOk = 0,
    /// A pointer was null or a parameter was out of domain.
    PrimInvalidArgument = 1,
    /// The input string was not a decimal number or a certificate.
    PrimParseError = 2,
    /// The prover exhausted its budget without settling the input.
    PrimProverFailed = 3,
    /// The certificate is well-formed but its claim does not check out.
    PrimVerifyFailed = 4,
    /// An internal invariant failed; the detail message has more.
    PrimInternalError = 5,
}

/// Primality verdict for a tested or proven number.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PrimVerdict {
    /// The number is composite.
    PrimComposite = 0,
    /// The number passed a randomized screen; no proof is attached.
    PrimProbablePrime = 1,
    /// The number is prime, with a proof or deterministic test behind it.
    PrimPrime = 2,
}

/// An opaque primality certificate, produced by [`prim_prove`] or
/// [`prim_cert_parse`] and released with [`prim_cert_free`].
pub struct PrimCert {
    inner: Certificate,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> =
        RefCell::new(CString::new("no error").expect("static message"));
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NUL bytes stripped");
    });
}

/// The detail message for the most recent failure on this thread.  The
/// pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn prim_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Shields the boundary: panics become `PrimInternalError`.
fn guarded(body: impl FnOnce() -> PrimStatus) -> PrimStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(panic) => {
            let detail = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(&format!("internal panic: {detail}"));
            PrimStatus::PrimInternalError
        }
    }
}

/// Reads a decimal number from a C string.
///
/// # Safety
/// `text` must be a valid NUL-terminated string or null.
unsafe fn read_number(text: *const c_char) -> Result<BigUint, PrimStatus> {
    if text.is_null() {
        set_error("number pointer is null");
        return Err(PrimStatus::PrimInvalidArgument);
    }
    let bytes = CStr::from_ptr(text).to_bytes();
    if bytes.is_empty() || !bytes.iter().all(|b| b.is_ascii_digit()) {
        set_error("number must be a nonempty decimal string");
        return Err(PrimStatus::PrimParseError);
    }
    BigUint::parse_bytes(bytes, 10).ok_or_else(|| {
        set_error("number failed to parse");
        PrimStatus::PrimParseError
    })
}

/// Tests `n_decimal` for primality and writes the verdict to `out_verdict`.
///
/// Numbers below `2^64` get the deterministic strong-pseudoprime sweep, so
/// their `PrimPrime`/`PrimComposite` verdicts are unconditional; larger
/// numbers get `rounds` randomized strong tests seeded by `seed` and report
/// `PrimProbablePrime` on survival.
///
/// # Safety
/// `n_decimal` must be a valid NUL-terminated string; `out_verdict` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn prim_test(
    n_decimal: *const c_char,
    rounds: u32,
    seed: u64,
    out_verdict: *mut PrimVerdict,
) -> PrimStatus {
    guarded(|| {
        if out_verdict.is_null() {
            set_error("verdict pointer is null");
            return PrimStatus::PrimInvalidArgument;
        }
        let n = match read_number(n_decimal) {
            Ok(n) => n,
            Err(status) => return status,
        };
        if n < BigUint::from(2u32) {
            *out_verdict = PrimVerdict::PrimComposite;
            return PrimStatus::PrimOk;
        }
        let verdict = if n.bits() <= 64 {
            match miller_grh(&n) {
                Ok(out) => match out.verdict {
                    Verdict::Prime | Verdict::ProbablePrime => PrimVerdict::PrimPrime,
                    Verdict::Composite => PrimVerdict::PrimComposite,
                },
                Err(e) => {
                    set_error(&e.to_string());
                    return PrimStatus::PrimInvalidArgument;
                }
            }
        } else {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            match miller_rabin(&n, rounds.max(1), &mut rng) {
                Ok(out) => match out.verdict {
                    Verdict::Prime => PrimVerdict::PrimPrime,
                    Verdict::ProbablePrime => PrimVerdict::PrimProbablePrime,
                    Verdict::Composite => PrimVerdict::PrimComposite,
                },
                Err(e) => {
                    set_error(&e.to_string());
                    return PrimStatus::PrimInvalidArgument;
                }
            }
        };
        *out_verdict = verdict;
        PrimStatus::PrimOk
    })
}

/// Proves or disproves the primality of `n_decimal` with the certifying
/// chain prover.  On a prime, `*out_verdict` is `PrimPrime` and `*out_cert`
/// owns the certificate; on a composite, `*out_verdict` is `PrimComposite`
/// and `*out_cert` is null.  `PrimProverFailed` means the search budget ran
/// out with no verdict.
///
/// # Safety
/// `n_decimal` must be a valid NUL-terminated string; `out_verdict` and
/// `out_cert` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn prim_prove(
    n_decimal: *const c_char,
    seed: u64,
    out_verdict: *mut PrimVerdict,
    out_cert: *mut *mut PrimCert,
) -> PrimStatus {
    guarded(|| {
        if out_verdict.is_null() || out_cert.is_null() {
            set_error("output pointer is null");
            return PrimStatus::PrimInvalidArgument;
        }
        *out_cert = std::ptr::null_mut();
        let n = match read_number(n_decimal) {
            Ok(n) => n,
            Err(status) => return status,
        };
        if n < BigUint::from(2u32) {
            *out_verdict = PrimVerdict::PrimComposite;
            return PrimStatus::PrimOk;
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        match ecpp_prove(&n, &mut rng, &EcppConfig::default()) {
            Ok(EcppOutcome::Proven(cert)) => {
                *out_verdict = PrimVerdict::PrimPrime;
                *out_cert = Box::into_raw(Box::new(PrimCert { inner: cert }));
                PrimStatus::PrimOk
            }
            Ok(EcppOutcome::Composite(_)) => {
                *out_verdict = PrimVerdict::PrimComposite;
                PrimStatus::PrimOk
            }
            Ok(EcppOutcome::Exhausted { steps_tried }) => {
                set_error(&format!("prover exhausted after {steps_tried} chain attempts"));
                PrimStatus::PrimProverFailed
            }
            Err(e) => {
                set_error(&e.to_string());
                PrimStatus::PrimInvalidArgument
            }
        }
    })
}

/// Re-checks a certificate from first principles.
///
/// # Safety
/// `cert` must be a pointer from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn prim_cert_verify(cert: *const PrimCert) -> PrimStatus {
    guarded(|| {
        let Some(cert) = cert.as_ref() else {
            set_error("certificate pointer is null");
            return PrimStatus::PrimInvalidArgument;
        };
        match cert::verify(&cert.inner) {
            Ok(()) => PrimStatus::PrimOk,
            Err(failure) => {
                set_error(&failure.to_string());
                PrimStatus::PrimVerifyFailed
            }
        }
    })
}

/// The subject of a certificate as a fresh decimal string; free it with
/// [`prim_string_free`].  Returns null on a null handle.
///
/// # Safety
/// `cert` must be a pointer from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn prim_cert_subject(cert: *const PrimCert) -> *mut c_char {
    let Some(cert) = cert.as_ref() else {
        set_error("certificate pointer is null");
        return std::ptr::null_mut();
    };
    CString::new(cert.inner.subject().to_string())
        .expect("decimal strings have no NUL")
        .into_raw()
}

/// Renders a certificate in its canonical text encoding; free the string
/// with [`prim_string_free`].  Returns null on a null handle.
///
/// # Safety
/// `cert` must be a pointer from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn prim_cert_to_text(cert: *const PrimCert) -> *mut c_char {
    let Some(cert) = cert.as_ref() else {
        set_error("certificate pointer is null");
        return std::ptr::null_mut();
    };
    CString::new(cert.inner.to_text())
        .expect("certificate text has no NUL")
        .into_raw()
}

/// Parses the canonical text encoding back into a certificate handle.
/// Parsing is structural; call [`prim_cert_verify`] to check the claim.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out_cert` must be a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn prim_cert_parse(
    text: *const c_char,
    out_cert: *mut *mut PrimCert,
) -> PrimStatus {
    guarded(|| {
        if out_cert.is_null() {
            set_error("output pointer is null");
            return PrimStatus::PrimInvalidArgument;
        }
        *out_cert = std::ptr::null_mut();
        if text.is_null() {
            set_error("text pointer is null");
            return PrimStatus::PrimInvalidArgument;
        }
        let text = match CStr::from_ptr(text).to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("certificate text is not UTF-8");
                return PrimStatus::PrimParseError;
            }
        };
        match Certificate::parse(text) {
            Ok(cert) => {
                *out_cert = Box::into_raw(Box::new(PrimCert { inner: cert }));
                PrimStatus::PrimOk
            }
            Err(e) => {
                set_error(&e.to_string());
                PrimStatus::PrimParseError
            }
        }
    })
}

/// Releases a certificate handle.  Null is a no-op.
///
/// # Safety
/// `cert` must be a pointer from this library that has not been freed, or
/// null.
#[no_mangle]
pub unsafe extern "C" fn prim_cert_free(cert: *mut PrimCert) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

/// Releases a string returned by this library.  Null is a no-op.
///
/// # Safety
/// `text` must be a string pointer from this library that has not been
/// freed, or null.
#[no_mangle]
pub unsafe extern "C" fn prim_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cstr(text: &str) -> CString {
        CString::new(text).unwrap()
    }

    #[test]
    fn test_classifies_primes_composites_and_garbage() {
        let mut verdict = PrimVerdict::PrimProbablePrime;
        let status = unsafe { prim_test(cstr("65537").as_ptr(), 20, 1, &mut verdict) };
        assert_eq!(status, PrimStatus::PrimOk);
        assert_eq!(verdict, PrimVerdict::PrimPrime, "65537 is prime, deterministically");

        let status = unsafe { prim_test(cstr("561").as_ptr(), 20, 1, &mut verdict) };
        assert_eq!(status, PrimStatus::PrimOk);
        assert_eq!(verdict, PrimVerdict::PrimComposite, "561 is a Carmichael number");

        let status = unsafe { prim_test(cstr("1").as_ptr(), 20, 1, &mut verdict) };
        assert_eq!(status, PrimStatus::PrimOk);
        assert_eq!(verdict, PrimVerdict::PrimComposite, "1 is not prime");

        let status = unsafe { prim_test(cstr("12x").as_ptr(), 20, 1, &mut verdict) };
        assert_eq!(status, PrimStatus::PrimParseError, "garbage is a parse error");

        let status = unsafe { prim_test(std::ptr::null(), 20, 1, &mut verdict) };
        assert_eq!(status, PrimStatus::PrimInvalidArgument, "null input is invalid");
        let message = unsafe { CStr::from_ptr(prim_last_error()) };
        assert!(
            message.to_str().unwrap().contains("null"),
            "the detail message names the problem"
        );
    }

    #[test]
    fn large_inputs_report_probable_primality() {
        // 2^89 - 1 is a Mersenne prime, just above the deterministic range.
        let mut verdict = PrimVerdict::PrimComposite;
        let n = cstr("618970019642690137449562111");
        let status = unsafe { prim_test(n.as_ptr(), 20, 1, &mut verdict) };
        assert_eq!(status, PrimStatus::PrimOk);
        assert_eq!(
            verdict,
            PrimVerdict::PrimProbablePrime,
            "beyond 64 bits the screen is probabilistic"
        );
    }

    #[test]
    fn prove_round_trips_a_certificate_through_text() {
        let mut verdict = PrimVerdict::PrimComposite;
        let mut cert: *mut PrimCert = std::ptr::null_mut();
        let n = cstr("1000000000039");
        let status = unsafe { prim_prove(n.as_ptr(), 7, &mut verdict, &mut cert) };
        assert_eq!(status, PrimStatus::PrimOk);
        assert_eq!(verdict, PrimVerdict::PrimPrime);
        assert!(!cert.is_null(), "a prime verdict carries a certificate");
        assert_eq!(unsafe { prim_cert_verify(cert) }, PrimStatus::PrimOk);

        let subject = unsafe { prim_cert_subject(cert) };
        assert_eq!(
            unsafe { CStr::from_ptr(subject) }.to_str().unwrap(),
            "1000000000039"
        );
        let text = unsafe { prim_cert_to_text(cert) };
        let rendered = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_string();
        assert!(rendered.starts_with("PRIMECERT v1"), "got {rendered:?}");

        let mut reparsed: *mut PrimCert = std::ptr::null_mut();
        let parse_status = unsafe { prim_cert_parse(cstr(&rendered).as_ptr(), &mut reparsed) };
        assert_eq!(parse_status, PrimStatus::PrimOk);
        assert_eq!(unsafe { prim_cert_verify(reparsed) }, PrimStatus::PrimOk);

        unsafe {
            prim_string_free(subject);
            prim_string_free(text);
            prim_cert_free(reparsed);
            prim_cert_free(cert);
        }
    }

    #[test]
    fn prove_rejects_composites_without_a_certificate() {
        let mut verdict = PrimVerdict::PrimPrime;
        let mut cert: *mut PrimCert = std::ptr::null_mut();
        let n = cstr("1000000000037");
        let status = unsafe { prim_prove(n.as_ptr(), 7, &mut verdict, &mut cert) };
        assert_eq!(status, PrimStatus::PrimOk);
        assert_eq!(verdict, PrimVerdict::PrimComposite, "10^12 + 37 = 29 * 34482758621");
        assert!(cert.is_null(), "composites carry no certificate");
    }

    #[test]
    fn tampered_text_fails_verification_not_parsing() {
        let mut verdict = PrimVerdict::PrimComposite;
        let mut cert: *mut PrimCert = std::ptr::null_mut();
        let n = cstr("1000000007");
        unsafe {
            assert_eq!(
                prim_prove(n.as_ptr(), 3, &mut verdict, &mut cert),
                PrimStatus::PrimOk
            );
        }
        let text = unsafe { prim_cert_to_text(cert) };
        let rendered = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_string();
        let tampered = rendered.replace("subject=1000000007", "subject=1000000009");
        assert_ne!(tampered, rendered, "the edit must land");

        let mut handle: *mut PrimCert = std::ptr::null_mut();
        let status = unsafe { prim_cert_parse(cstr(&tampered).as_ptr(), &mut handle) };
        assert_eq!(status, PrimStatus::PrimOk, "tampering is structurally fine");
        assert_eq!(
            unsafe { prim_cert_verify(handle) },
            PrimStatus::PrimVerifyFailed,
            "verification catches the lie"
        );
        let message = unsafe { CStr::from_ptr(prim_last_error()) };
        assert!(!message.to_bytes().is_empty(), "a detail message is recorded");

        let garbled = cstr("PRIMECERT v2 subject=5");
        let status = unsafe { prim_cert_parse(garbled.as_ptr(), &mut handle) };
        assert_eq!(status, PrimStatus::PrimParseError, "bad framing is a parse error");

        unsafe {
            prim_string_free(text);
            prim_cert_free(cert);
        }
    }

    #[test]
    fn null_handles_are_tolerated() {
        unsafe {
            assert_eq!(prim_cert_verify(std::ptr::null()), PrimStatus::PrimInvalidArgument);
            assert!(prim_cert_to_text(std::ptr::null()).is_null());
            assert!(prim_cert_subject(std::ptr::null()).is_null());
            prim_cert_free(std::ptr::null_mut());
            prim_string_free(std::ptr::null_mut());
        }
    }

    #[test]
    fn generated_header_declares_the_surface() {
        let header = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/include/primality.h"
        ))
        .expect("the build script generates the header");
        for needle in [
            "typedef struct PrimCert PrimCert;",
            "prim_test",
            "prim_prove",
            "prim_cert_verify",
            "prim_cert_to_text",
            "prim_cert_parse",
            "prim_cert_subject",
            "prim_cert_free",
            "prim_string_free",
            "prim_last_error",
            "PRIM_OK",
        ] {
            assert!(header.contains(needle), "header is missing {needle:?}");
        }
    }
}
