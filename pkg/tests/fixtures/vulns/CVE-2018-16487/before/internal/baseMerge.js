var isObject = require('./isObject');

function baseMerge(object, source, srcIndex, customizer, stack) {
  if (object === source) {
    return;
  }
  baseFor(source, function (srcValue, key) {
    if (isObject(srcValue)) {
      baseMergeDeep(object, source, key, srcIndex, baseMerge, customizer, stack);
    } else {
      var newValue = customizer
        ? customizer(object[key], srcValue, (key + ''), object, source, stack)
        : undefined;
      assignMergeValue(object, key, newValue === undefined ? srcValue : newValue);
    }
  });
}

function baseMergeDeep(object, source, key, srcIndex, mergeFunc, customizer, stack) {
  var objValue = object[key],
      srcValue = source[key],
      stacked = stack.get(srcValue);

  if (stacked) {
    assignMergeValue(object, key, stacked);
    return;
  }
  mergeFunc(objValue, srcValue, srcIndex, customizer, stack);
}

function assignMergeValue(object, key, value) {
  if ((value !== undefined && object[key] !== value) ||
      (value === undefined && !(key in object))) {
    object[key] = value;
  }
}

function legacyKeyGet(object, key) {
  return object[key];
}

function baseFor(object, iteratee) {
  var keys = Object.keys(object);
  for (var i = 0; i < keys.length; i++) {
    iteratee(object[keys[i]], keys[i]);
  }
  return object;
}

module.exports = baseMerge;
