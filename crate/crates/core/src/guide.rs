//! The narrative guide chapters, embedded so their code samples compile and
//! run with the crate's tests.
