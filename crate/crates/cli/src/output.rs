use std::io::{self, BufWriter, Stdout, Write};

use serde::Serialize;

use crate::args::Format;

/// Buffered stdout in the selected record format.
pub struct Sink {
    format: Format,
    out: BufWriter<Stdout>,
}

impl Sink {
    pub fn stdout(format: Format) -> Self {
        Self { format, out: BufWriter::new(io::stdout()) }
    }

    pub fn format(&self) -> Format {
        self.format
    }

    /// One JSON record on its own line.
    pub fn json<T: Serialize>(&mut self, record: &T) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }

    /// Header plus one row per record.
    pub fn csv<T: Serialize>(&mut self, rows: &[T]) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(&mut self.out);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Either form, whichever the user asked for.
    pub fn emit<J: Serialize, C: Serialize>(&mut self, json: &[J], rows: &[C]) -> Result<(), crate::commands::CliError> {
        match self.format {
            Format::Jsonl => {
                for r in json {
                    self.json(r)?;
                }
            }
            Format::Csv => self.csv(rows)?,
        }
        Ok(())
    }

    pub fn raw(&mut self) -> &mut dyn Write {
        &mut self.out
    }
}

impl Drop for Sink {
    fn drop(&mut self) {
        let _ = self.out.flush();
    }
}
