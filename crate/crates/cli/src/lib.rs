//! Library side of the offlang CLI: file formats, run configuration,
//! synthetic corpus generation, and the subcommand implementations.
