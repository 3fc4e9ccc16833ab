from .windows import ClientDataset, normalize, split_train_test, window_slice
from .synthetic import generate_synthetic
from .csv_io import CsvSchema, export_csv, load_csv, read_series, write_dataset_manifest
