export { float16ToNumber, decodeFloat16Array } from "./float16";
export { parseNpy, npyPayload, NpyArray } from "./npy";
export {
  FORMAT_VERSION,
  HEADER_SIZE,
  MAGIC,
  MissingRecordError,
  StoreFormatError,
  StoreHeader,
  StoredRecord,
  StoreView,
  openStore,
} from "./store";
export { ReplayOptions, ReplayedSlot, replay, replayMany } from "./replay";
