//! Command-line interface (placeholder).

pub fn run<I, T>(_argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    2
}
