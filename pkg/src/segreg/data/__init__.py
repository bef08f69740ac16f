from .loaders import file_digest, load_data, load_data_from_csv
from .transforms import center_dataset, dataset_to_frame, order_rows
from .writers import atomic_write_text, write_csv, write_dataset_csv, write_json
